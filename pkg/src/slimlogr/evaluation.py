"""Five-fold cross validation with knowledge pools and truncated metrics.

Each test prescription loses one random drug; a method then recommends ``N``
to-avoid and ``N`` safe drugs for the reduced prescription ``a``.  A
recommended to-avoid drug ``d`` is a hit when ``a | {d}`` is a positive pool
prescription, a safe drug when ``a | {d}`` is a negative pool prescription.

Counts are pooled over all test prescriptions, and each metric is divided by
the best value reachable with ``N`` recommendations per prescription.
"""

from __future__ import annotations

import logging
import os
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import recommend as rec
from .core import DatasetError, LabeledDataset, PrescriptionMatrix
from .joint import JointHyper, JointModel, train_joint, train_separate

log = logging.getLogger(__name__)

N_FOLDS = 5
METHODS = ("rand", "logr", "slim", "slim+logr", "slimlogr")
POOL_MODES = ("test_only", "full_universe")


@dataclass(frozen=True)
class FoldPlan:
    """Fold id for every row of ``positives`` followed by ``negatives``."""

    assignments: tuple[int, ...]
    seed: int
    n_positive: int

    @classmethod
    def make(cls, data: LabeledDataset, seed: int, n_folds: int = N_FOLDS) -> "FoldPlan":
        m = len(data.positives) + len(data.negatives)
        if m < n_folds:
            raise DatasetError(f"{m} rows cannot fill {n_folds} folds")
        perm = np.random.default_rng(seed).permutation(m)
        folds = np.empty(m, dtype=int)
        folds[perm] = np.arange(m) % n_folds
        return cls(tuple(int(f) for f in folds), seed, len(data.positives))

    def split(self, data: LabeledDataset, fold: int) -> tuple[LabeledDataset, LabeledDataset]:
        """``(train, test)`` datasets for ``fold``."""
        a = np.asarray(self.assignments)
        p = self.n_positive
        parts = []
        for in_fold in (a != fold, a == fold):
            pos = np.flatnonzero(in_fold[:p])
            neg = np.flatnonzero(in_fold[p:])
            parts.append(LabeledDataset(data.positives.subset(pos), data.negatives.subset(neg), data.vocabulary))
        train, test = parts
        for name, d in (("training", train), ("test", test)):
            if len(d.positives) == 0 or len(d.negatives) == 0:
                raise DatasetError(
                    f"fold {fold}: {name} split has {len(d.positives)} positive and "
                    f"{len(d.negatives)} negative rows"
                )
        return train, test


@dataclass(frozen=True)
class HeldOut:
    reduced: frozenset
    removed: int


def make_test_set(fold_rows: PrescriptionMatrix | Iterable[frozenset], positives: set, seed) -> list[HeldOut]:
    """Remove one random drug per row; drop rows whose reduction is a known positive.

    ``seed`` is an int or a ``numpy.random.Generator``; one draw is consumed
    per row with at least two drugs, in row order.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rows = fold_rows.rows if isinstance(fold_rows, PrescriptionMatrix) else fold_rows
    out = []
    for row in rows:
        if len(row) < 2:
            warnings.warn(f"skipping single-drug test prescription {sorted(row)}", stacklevel=2)
            continue
        drugs = sorted(row)
        removed = drugs[int(rng.integers(len(drugs)))]
        reduced = frozenset(row - {removed})
        if reduced not in positives:
            out.append(HeldOut(reduced, removed))
    return out


@dataclass(frozen=True)
class KnowledgePool:
    pool_plus: frozenset
    pool_minus: frozenset

    def __post_init__(self):
        object.__setattr__(self, "pool_plus", frozenset(frozenset(r) for r in self.pool_plus))
        object.__setattr__(self, "pool_minus", frozenset(frozenset(r) for r in self.pool_minus))

    @staticmethod
    def _extensions(pool: frozenset) -> Counter:
        # reduced prescription -> number of pool rows that extend it by one drug
        c: Counter = Counter()
        for r in pool:
            if len(r) >= 2:
                for d in r:
                    c[r - {d}] += 1
        return c

    def truths(self) -> tuple[Counter, Counter]:
        return self._extensions(self.pool_plus), self._extensions(self.pool_minus)


def make_pool(mode: str, train: LabeledDataset, test: LabeledDataset, universe: LabeledDataset | None = None) -> KnowledgePool:
    """Test-fold rows by label, or the labeled universe minus every training row."""
    if mode == "test_only":
        return KnowledgePool(frozenset(test.positives.rows), frozenset(test.negatives.rows))
    if mode == "full_universe":
        u = universe if universe is not None else _union(train, test)
        seen = set(train.positives.rows) | set(train.negatives.rows)
        return KnowledgePool(
            frozenset(r for r in u.positives.rows if r not in seen),
            frozenset(r for r in u.negatives.rows if r not in seen),
        )
    raise ValueError(f"unknown pool mode {mode!r}")


def _union(a: LabeledDataset, b: LabeledDataset) -> LabeledDataset:
    n = a.n_drugs
    return LabeledDataset(
        PrescriptionMatrix(a.positives.rows + b.positives.rows, n),
        PrescriptionMatrix(a.negatives.rows + b.negatives.rows, n),
        a.vocabulary,
    )


@dataclass(frozen=True)
class MetricReport:
    rec_t: float
    prec_t: float
    acc_t: float
    rec_t_max: float
    prec_t_max: float
    acc_t_max: float
    rec_norm: float
    prec_norm: float
    acc_norm: float
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    n_pos_truths: int = 0
    n_neg_truths: int = 0
    n_tests: int = 0
    flags: tuple[str, ...] = ()

    def normalized(self) -> tuple[float, float, float]:
        return self.rec_norm, self.prec_norm, self.acc_norm


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def truncated_metrics(recs_to_avoid: Sequence[Sequence[int]], recs_safe: Sequence[Sequence[int]],
                      tests: Sequence[frozenset], pool: KnowledgePool, N: int) -> MetricReport:
    """Pooled truncated recall, precision and accuracy with their maxima.

    ``recs_*[i]`` are drug ids recommended for ``tests[i]`` (at most ``N``).
    """
    if not (len(recs_to_avoid) == len(recs_safe) == len(tests)):
        raise ValueError("one recommendation list per test prescription is required")
    if N < 1:
        raise ValueError("N must be positive")
    m = len(tests)
    ext_plus, ext_minus = pool.truths()
    tp = tn = best_p = best_q = sum_p = sum_q = 0
    for a, avoid, safe in zip(tests, recs_to_avoid, recs_safe):
        a = frozenset(a)
        if len(avoid) > N or len(safe) > N:
            raise ValueError(f"more than N={N} recommendations for {sorted(a)}")
        p, q = ext_plus.get(a, 0), ext_minus.get(a, 0)
        sum_p += p
        sum_q += q
        best_p += min(N, p)
        best_q += min(N, q)
        tp += sum(1 for d in set(avoid) if d not in a and (a | {d}) in pool.pool_plus)
        tn += sum(1 for d in set(safe) if d not in a and (a | {d}) in pool.pool_minus)
    fp, fn = m * N - tp, m * N - tn
    flags = []
    if sum_p == 0:
        flags.append("no_positive_truths")
    if m == 0:
        flags.append("no_test_prescriptions")
    rec_t, prec_t, acc_t = _ratio(tp, sum_p), _ratio(tp, m * N), _ratio(tp + tn, 2 * m * N)
    rmax, pmax, amax = _ratio(best_p, sum_p), _ratio(best_p, m * N), _ratio(best_p + best_q, 2 * m * N)
    for name, mx in (("rec", rmax), ("prec", pmax), ("acc", amax)):
        if mx == 0:
            flags.append(f"{name}_max_zero")
    return MetricReport(
        rec_t, prec_t, acc_t, rmax, pmax, amax,
        _ratio(rec_t, rmax), _ratio(prec_t, pmax), _ratio(acc_t, amax),
        tp, fp, tn, fn, sum_p, sum_q, m, tuple(flags),
    )


@dataclass(frozen=True)
class CVReport:
    method: str
    pool_mode: str
    prediction: str
    N: int
    folds: tuple[MetricReport, ...]
    rec: float
    prec: float
    acc: float

    @classmethod
    def average(cls, method, pool_mode, prediction, N, folds) -> "CVReport":
        arr = np.array([f.normalized() for f in folds])
        rec_, prec_, acc_ = (float(v) for v in arr.mean(axis=0))
        return cls(method, pool_mode, prediction, N, tuple(folds), rec_, prec_, acc_)


@dataclass(frozen=True)
class CVConfig:
    method: str = "slimlogr"
    pool_mode: str = "test_only"
    variant: str = "inclusive"
    prediction: str = "score"
    M: int = 20
    seed: int = 0
    hyper: JointHyper = field(default_factory=JointHyper)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.pool_mode not in POOL_MODES:
            raise ValueError(f"unknown pool mode {self.pool_mode!r}")


def _fit(method: str, train: LabeledDataset, cfg: CVConfig) -> JointModel | None:
    if method == "rand":
        return None
    if method == "slimlogr":
        return train_joint(train, cfg.hyper, cfg.variant)
    return train_separate(train, cfg.hyper)


def _recommender(method: str, model: JointModel | None, n: int, rng: np.random.Generator):
    if method == "rand":
        return lambda a, c: rec.baseline_rand(a, c, rng, n)
    if method == "logr":
        return lambda a, c: rec.baseline_logr(model.logr, a, c)
    if method == "slim":
        return lambda a, c: rec.baseline_slim(model.W_plus, model.W_minus, a, c)
    if method == "slim+logr":
        return lambda a, c: rec.baseline_slim_plus_logr(model, a, c)
    return lambda a, c: rec.recommend(model, a, c)


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("POLYRX_THREADS", "1")))
    except ValueError:
        return 1


def fold_setup(data: LabeledDataset, plan: FoldPlan, fold: int, cfg: CVConfig,
               universe: LabeledDataset | None = None) -> tuple[LabeledDataset, list[HeldOut], KnowledgePool]:
    """Training split, test cases and knowledge pool of one fold."""
    train, test = plan.split(data, fold)
    # a reduction that is itself a known positive already "induces the ADR"
    drop = set(universe.positives.rows) if universe is not None else set(train.positives.rows)
    rows = test.positives.rows + test.negatives.rows
    tests = make_test_set(rows, drop, np.random.default_rng([cfg.seed, 1, fold]))
    return train, tests, make_pool(cfg.pool_mode, train, test, universe)


def cross_validate(data: LabeledDataset, cfg: CVConfig, Ns: Sequence[int] = (5,),
                   universe: LabeledDataset | None = None) -> dict[int, CVReport]:
    """Run the five folds once and score every ``N`` in ``Ns`` from the same models.

    Folds may run concurrently (``POLYRX_THREADS``); results are merged by fold id.
    """
    Ns = tuple(sorted(set(int(N) for N in Ns)))
    if not Ns or Ns[0] < 1:
        raise ValueError("N values must be positive")
    plan = FoldPlan.make(data, cfg.seed)

    def run_fold(fold: int) -> dict[int, MetricReport]:
        train, tests, pool = fold_setup(data, plan, fold, cfg, universe)
        model = _fit(cfg.method, train, cfg)
        out = {}
        for N in Ns:
            rng = np.random.default_rng([cfg.seed, 2, fold, N])
            recommender = _recommender(cfg.method, model, data.n_drugs, rng)
            M = max(cfg.M, N)
            avoid, safe = [], []
            for t in tests:
                avoid.append([r.drug for r in recommender(t.reduced, rec.RecConfig(M, N, cfg.prediction, "to_avoid"))])
                safe.append([r.drug for r in recommender(t.reduced, rec.RecConfig(M, N, cfg.prediction, "safe"))])
            out[N] = truncated_metrics(avoid, safe, [t.reduced for t in tests], pool, N)
        log.debug("fold %d done (%s)", fold, cfg.method)
        return out

    with ThreadPoolExecutor(max_workers=_thread_cap()) as ex:
        per_fold = list(ex.map(run_fold, range(N_FOLDS)))
    return {N: CVReport.average(cfg.method, cfg.pool_mode, cfg.prediction, N, [f[N] for f in per_fold]) for N in Ns}


def run_cv(data: LabeledDataset, pool_mode: str = "test_only", method: str = "slimlogr",
           hyper: JointHyper = JointHyper(), N: int = 5, seed: int = 0,
           universe: LabeledDataset | None = None, M: int = 20, variant: str = "inclusive",
           prediction: str = "score") -> CVReport:
    """Average normalized metrics over five folds for one method."""
    cfg = CVConfig(method, pool_mode, variant, prediction, M, seed, hyper)
    return cross_validate(data, cfg, (N,), universe)[N]

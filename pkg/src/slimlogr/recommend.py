"""Two-step drug recommendation and the comparison baselines.

Step 1 ranks drugs absent from a prescription by their SLIM score (``W_plus``
for to-avoid drugs, ``W_minus`` for safe drugs) and keeps the top ``M`` with a
positive score.  Step 2 re-ranks those candidates by the logistic model's
probability for the new prescription ``a | {d}`` and keeps the top ``N``.

Ordering ties are broken by SLIM score (descending), then drug id (ascending).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import expit

from . import slim
from .core import VocabularyMismatchError, make_prescription, to_dense_row
from .joint import JointModel
from .logreg import LogRModel
from .slim import SlimModel

Prediction = Literal["score", "content"]
Direction = Literal["to_avoid", "safe"]


@dataclass(frozen=True)
class RecConfig:
    M: int = 20
    N: int = 5
    prediction: str = "score"
    direction: str = "to_avoid"

    def __post_init__(self):
        if not 1 <= self.N <= self.M:
            raise ValueError(f"need 1 <= N <= M, got N={self.N}, M={self.M}")
        if self.prediction not in ("score", "content"):
            raise ValueError(f"unknown prediction variant {self.prediction!r}")
        if self.direction not in ("to_avoid", "safe"):
            raise ValueError(f"unknown direction {self.direction!r}")


@dataclass(frozen=True)
class Recommendation:
    drug: int
    slim_score: float
    adr_probability: float
    rank: int


def _check(a, n: int) -> frozenset:
    a = make_prescription(a)
    if max(a) >= n:
        raise VocabularyMismatchError(f"drug ids {sorted(a)} outside vocabulary of size {n}")
    return a


def _absent(a: frozenset, n: int) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[sorted(a)] = False
    return np.flatnonzero(mask)


def slim_candidates(W: SlimModel, a, M: int) -> list[tuple[int, float]]:
    """Top-``M`` absent drugs with a positive SLIM score, as ``(drug, score)``."""
    a = _check(a, W.n_drugs)
    scores = slim.score(W, a)
    cand = [int(j) for j in _absent(a, W.n_drugs) if scores[j] > 0]
    cand.sort(key=lambda j: (-scores[j], j))
    return [(j, float(scores[j])) for j in cand[:M]]


def candidate_features(W: np.ndarray, a: frozenset, drugs, prediction: str, exclusive: bool) -> np.ndarray:
    """Feature rows for the new prescriptions ``a | {d}``, one per candidate ``d``.

    ``content`` uses the binary indicator of ``a | {d}``.  ``score`` uses the
    SLIM score vector of ``a`` (which already holds every candidate's score),
    masked to the drugs of ``a | {d}`` when ``exclusive``.  Without the mask the
    score rows coincide, so the ordering falls back to the SLIM-score tie-break.
    """
    n = W.shape[0]
    base = to_dense_row(a, n)
    rows = np.repeat(base[None, :], len(drugs), axis=0)
    rows[np.arange(len(drugs)), np.asarray(drugs, dtype=int)] = 1.0
    if prediction == "content":
        return rows
    scores = np.repeat((base @ W)[None, :], len(drugs), axis=0)
    return scores * rows if exclusive else scores


def _rank(drugs, slim_scores, logits, direction: str, N: int) -> list[Recommendation]:
    # safe drugs are ranked by p(y=-1|f), i.e. ascending logit
    sign = 1.0 if direction == "to_avoid" else -1.0
    order = sorted(range(len(drugs)), key=lambda i: (-sign * logits[i], -slim_scores[i], drugs[i]))
    return [
        Recommendation(int(drugs[i]), float(slim_scores[i]), float(expit(logits[i])), r + 1)
        for r, i in enumerate(order[:N])
    ]


def _clamp(cfg: RecConfig, a: frozenset, n: int) -> tuple[int, int]:
    free = n - len(a)
    M = min(cfg.M, free)
    return M, min(cfg.N, M)


def two_step(W_plus: SlimModel, W_minus: SlimModel, logr: LogRModel, a, cfg: RecConfig,
             exclusive: bool = False) -> list[Recommendation]:
    n = W_plus.n_drugs
    a = _check(a, n)
    M, N = _clamp(cfg, a, n)
    if M == 0:
        return []
    W = W_plus if cfg.direction == "to_avoid" else W_minus
    cand = slim_candidates(W, a, M)
    if not cand:
        return []
    drugs = [d for d, _ in cand]
    if cfg.prediction == "score" and not exclusive:
        # one shared feature row; broadcast so the tie is exact
        f = candidate_features(W.W, a, drugs[:1], "score", False)[0]
        logits = np.full(len(drugs), float(f @ logr.x) + logr.c)
    else:
        F = candidate_features(W.W, a, drugs, cfg.prediction, exclusive)
        logits = F @ logr.x + logr.c
    return _rank(drugs, [s for _, s in cand], logits, cfg.direction, N)


def recommend(model: JointModel, a, cfg: RecConfig = RecConfig()) -> list[Recommendation]:
    """SlimLogR recommendation for prescription ``a``; may return fewer than ``N``."""
    return two_step(model.W_plus, model.W_minus, model.logr, a, cfg, exclusive=model.variant == "exclusive")


def baseline_slim_plus_logr(model: JointModel, a, cfg: RecConfig = RecConfig()) -> list[Recommendation]:
    """Same pipeline as :func:`recommend` on independently trained components."""
    return two_step(model.W_plus, model.W_minus, model.logr, a, cfg, exclusive=False)


def baseline_slim(W_plus: SlimModel, W_minus: SlimModel, a, cfg: RecConfig = RecConfig()) -> list[Recommendation]:
    """Stage 1 only: top-``N`` absent drugs by SLIM score."""
    W = W_plus if cfg.direction == "to_avoid" else W_minus
    a = _check(a, W.n_drugs)
    _, N = _clamp(cfg, a, W.n_drugs)
    cand = slim_candidates(W, a, N)
    return [Recommendation(d, s, float("nan"), r + 1) for r, (d, s) in enumerate(cand)]


def baseline_logr(logr: LogRModel, a, cfg: RecConfig = RecConfig()) -> list[Recommendation]:
    """Rank every absent drug by ``p(y=+1 | a | {d})`` on binary features."""
    n = logr.n_features
    a = _check(a, n)
    _, N = _clamp(cfg, a, n)
    drugs = _absent(a, n).tolist()
    if not drugs:
        return []
    F = candidate_features(np.zeros((n, n)), a, drugs, "content", False)
    logits = F @ logr.x + logr.c
    return _rank(drugs, [0.0] * len(drugs), logits, cfg.direction, N)


def baseline_rand(a, cfg: RecConfig, seed, n_drugs: int) -> list[Recommendation]:
    """Uniform sample of ``N`` absent drugs without replacement.

    ``seed`` is an int or a ``numpy.random.Generator``.
    """
    a = _check(a, n_drugs)
    _, N = _clamp(cfg, a, n_drugs)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    picks = rng.choice(_absent(a, n_drugs), size=N, replace=False)
    nan = float("nan")
    return [Recommendation(int(d), nan, nan, r + 1) for r, d in enumerate(picks)]

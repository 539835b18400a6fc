"""Labeled dataset construction from adverse-event logs.

Every distinct drug combination in the log is a candidate prescription.  Its
2x2 contingency table against the case/control split decides where it lands:

* ``m_plus``  -- seen only in case events
* ``n_minus`` -- seen only in control events
* ``m_zero``  -- seen in both, odds ratio > 1
* ``n_zero``  -- seen in both, odds ratio < 1
* ``neutral`` -- seen in both with odds ratio 1 or undefined

Positives are the most frequent ``m_plus`` rows plus the ``m_zero`` rows whose
right-tailed Fisher p-value is significant; negatives are every ``n_zero`` row
plus the most frequent ``n_minus`` rows.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .core import DatasetError, DrugVocabulary, LabeledDataset, PrescriptionMatrix

NamedPrescription = frozenset  # frozenset[str]


@dataclass(frozen=True)
class EventLog:
    """Case (ADR reported) and control events; duplicates are kept."""

    case_events: tuple[NamedPrescription, ...]
    control_events: tuple[NamedPrescription, ...]

    def __post_init__(self):
        for attr in ("case_events", "control_events"):
            events = tuple(frozenset(e) for e in getattr(self, attr))
            for e in events:
                if len(e) < 2:
                    raise DatasetError(f"event {sorted(e)} has fewer than two drugs")
            object.__setattr__(self, attr, events)

    def drugs(self) -> list[str]:
        names = set()
        for e in self.case_events + self.control_events:
            names |= e
        return sorted(names)


@dataclass(frozen=True)
class ContingencyTable:
    """``n1``/``m1``: case/control events with the prescription; ``n2``/``m2``: without."""

    n1: int
    m1: int
    n2: int
    m2: int

    def __post_init__(self):
        for name in ("n1", "m1", "n2", "m2"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))


def contingency(log: EventLog, a: Iterable, containment: bool = False) -> ContingencyTable:
    """Count events matching ``a`` exactly (or containing it, with ``containment``)."""
    a = frozenset(a)
    match = (lambda e: a <= e) if containment else (lambda e: e == a)
    n1 = sum(1 for e in log.case_events if match(e))
    m1 = sum(1 for e in log.control_events if match(e))
    return ContingencyTable(n1, m1, len(log.case_events) - n1, len(log.control_events) - m1)


def odds_ratio(t: ContingencyTable) -> float:
    """``(n1/m1) / (n2/m2)``; ``inf`` for a zero denominator, ``nan`` when undefined."""
    num = t.n1 * t.m2
    den = t.m1 * t.n2
    if den == 0:
        return math.nan if num == 0 else math.inf
    return num / den


def _log_hyper(k: np.ndarray, r1: int, c1: int, total: int) -> np.ndarray:
    # log of C(c1, k) C(total - c1, r1 - k), without the shared C(total, r1)
    c2 = total - c1
    return (
        gammaln(c1 + 1) - gammaln(k + 1) - gammaln(c1 - k + 1)
        + gammaln(c2 + 1) - gammaln(r1 - k + 1) - gammaln(c2 - r1 + k + 1)
    )


@lru_cache(maxsize=65536)
def _tail_table(r1: int, r2: int, c1: int) -> tuple[int, np.ndarray]:
    """``(lo, tails)`` with ``tails[i] = P(X >= lo + i)`` at these margins."""
    total = r1 + r2
    lo, hi = max(0, r1 - (total - c1)), min(r1, c1)
    k = np.arange(lo, hi + 1, dtype=float)
    if k.size > 4096:
        # only a window around the mode carries probability mass in double precision
        mean = r1 * c1 / total
        sd = math.sqrt(max(mean * (1 - c1 / total) * (total - r1) / max(total - 1, 1), 1.0))
        wlo = max(lo, int(mean - 40 * sd) - 50)
        whi = min(hi, int(mean + 40 * sd) + 50)
        k = np.arange(wlo, whi + 1, dtype=float)
        lo = wlo
    logp = _log_hyper(k, r1, c1, total)
    w = np.exp(logp - logp.max())
    tails = np.cumsum(w[::-1])[::-1]
    tails = np.minimum(tails / tails[0], 1.0)
    tails.setflags(write=False)
    return lo, tails


def fisher_right_tail(t: ContingencyTable) -> float:
    """``P(X >= n1)`` for the hypergeometric law of ``n1`` at the table's margins."""
    r1, r2, c1 = t.n1 + t.m1, t.n2 + t.m2, t.n1 + t.n2
    if r1 == 0 or r2 == 0 or c1 == 0 or c1 == r1 + r2:
        return 1.0
    lo, tails = _tail_table(r1, r2, c1)
    i = t.n1 - lo
    if i <= 0:
        return 1.0
    if i >= tails.size:
        return 0.0
    return float(tails[i])


@dataclass(frozen=True)
class MinedRow:
    drugs: NamedPrescription
    table: ContingencyTable
    odds_ratio: float
    frequency: int
    first_seen: int


@dataclass(frozen=True)
class MinedPartition:
    m_plus: tuple[MinedRow, ...]
    m_zero: tuple[MinedRow, ...]
    n_zero: tuple[MinedRow, ...]
    n_minus: tuple[MinedRow, ...]
    neutral: tuple[MinedRow, ...] = field(default=())

    def all_rows(self) -> list[MinedRow]:
        return [*self.m_plus, *self.m_zero, *self.n_zero, *self.n_minus, *self.neutral]


def partition(log: EventLog, containment: bool = False) -> MinedPartition:
    """Split every distinct combination by where it occurs and by odds ratio.

    With ``containment`` an event counts for every logged combination it
    contains, not only for its own.
    """
    case = Counter(log.case_events)
    control = Counter(log.control_events)
    if containment:
        case = Counter({a: sum(c for e, c in case.items() if a <= e) for a in set(case) | set(control)})
        control = Counter({a: sum(c for e, c in control.items() if a <= e) for a in case})
    n_case, n_control = len(log.case_events), len(log.control_events)
    first: dict[frozenset, int] = {}
    for i, e in enumerate(log.case_events + log.control_events):
        first.setdefault(e, i)
    buckets: dict[str, list[MinedRow]] = {k: [] for k in ("m_plus", "m_zero", "n_zero", "n_minus", "neutral")}
    for e, pos in first.items():
        n1, m1 = case.get(e, 0), control.get(e, 0)
        t = ContingencyTable(n1, m1, n_case - n1, n_control - m1)
        ratio = odds_ratio(t)
        if m1 == 0:
            key, freq = "m_plus", n1
        elif n1 == 0:
            key, freq = "n_minus", m1
        elif ratio > 1:
            key, freq = "m_zero", n1
        elif ratio < 1:
            key, freq = "n_zero", m1
        else:
            key, freq = "neutral", n1 + m1
        buckets[key].append(MinedRow(e, t, ratio, freq, pos))
    return MinedPartition(**{k: tuple(v) for k, v in buckets.items()})


def most_frequent(rows: Iterable[MinedRow], k: int) -> list[MinedRow]:
    """Top ``k`` rows by frequency; ties go to the earlier first occurrence."""
    return sorted(rows, key=lambda r: (-r.frequency, r.first_seen))[:k]


@dataclass(frozen=True)
class MiningConfig:
    m_plus_top: int = 1000
    n_minus_top: int = 2200
    alpha_sig: float = 0.05
    containment: bool = False

    def __post_init__(self):
        if self.m_plus_top < 0 or self.n_minus_top < 0:
            raise ValueError("top-k counts must be non-negative")
        if not 0 <= self.alpha_sig <= 1:
            raise ValueError("alpha_sig must lie in [0, 1]")


def _encode(rows: Iterable[MinedRow], vocab: DrugVocabulary) -> PrescriptionMatrix:
    return PrescriptionMatrix(tuple(vocab.encode(r.drugs) for r in rows), len(vocab))


def build_dataset(log: EventLog, cfg: MiningConfig = MiningConfig()) -> tuple[LabeledDataset, LabeledDataset]:
    """Return ``(dataset, universe)`` over the vocabulary of every drug in the log.

    ``universe`` labels every mined combination: ``m_plus`` and ``m_zero``
    positive, ``n_minus`` and ``n_zero`` negative.
    """
    if not log.case_events or not log.control_events:
        raise DatasetError("the event log needs both case and control events")
    part = partition(log, cfg.containment)
    vocab = DrugVocabulary(tuple(log.drugs()))
    significant = [r for r in part.m_zero if fisher_right_tail(r.table) < cfg.alpha_sig]
    pos_rows = most_frequent(part.m_plus, cfg.m_plus_top) + significant
    neg_rows = list(part.n_zero) + most_frequent(part.n_minus, cfg.n_minus_top)
    if not pos_rows or not neg_rows:
        raise DatasetError(f"mined {len(pos_rows)} positive and {len(neg_rows)} negative prescriptions; both must be non-empty")
    dataset = LabeledDataset(_encode(pos_rows, vocab), _encode(neg_rows, vocab), vocab)
    universe = LabeledDataset(
        _encode([*part.m_plus, *part.m_zero], vocab), _encode([*part.n_minus, *part.n_zero], vocab), vocab
    )
    return dataset, universe

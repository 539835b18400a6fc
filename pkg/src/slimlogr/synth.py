"""Synthetic prescription data with planted co-prescription pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DrugVocabulary, LabeledDataset, PrescriptionMatrix


class SynthSizeError(ValueError):
    """Not enough distinct prescriptions can be drawn for the requested size."""


def _default_pos_pairs():
    return [(0, 1), (2, 3), (4, 5), (6, 7)]


def _default_neg_pairs():
    return [(8, 9), (10, 11), (12, 13), (14, 15)]


@dataclass(frozen=True)
class SynthSpec:
    n_drugs: int = 30
    n_pos: int = 200
    n_neg: int = 200
    planted_pos_pairs: list[tuple[int, int]] = field(default_factory=_default_pos_pairs)
    planted_neg_pairs: list[tuple[int, int]] = field(default_factory=_default_neg_pairs)
    pair_strength: float = 0.8
    noise_rate: float = 0.05
    seed: int = 0
    max_attempts_per_row: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "planted_pos_pairs", [tuple(sorted(map(int, p))) for p in self.planted_pos_pairs])
        object.__setattr__(self, "planted_neg_pairs", [tuple(sorted(map(int, p))) for p in self.planted_neg_pairs])
        if self.n_drugs < 2:
            raise ValueError("need at least two drugs")
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError("both classes need at least one row")
        if not 0 < self.pair_strength <= 1:
            raise ValueError("pair_strength must lie in (0, 1]")
        if not 0 <= self.noise_rate <= 1:
            raise ValueError("noise_rate must lie in [0, 1]")
        pairs = self.planted_pos_pairs + self.planted_neg_pairs
        for a, b in pairs:
            if a == b or not (0 <= a < self.n_drugs and 0 <= b < self.n_drugs):
                raise ValueError(f"invalid planted pair {(a, b)}")
        if set(self.planted_pos_pairs) & set(self.planted_neg_pairs):
            raise ValueError("positive and negative planted pairs must be disjoint")


@dataclass(frozen=True)
class SynthTruth:
    pos_pairs: list[tuple[int, int]]
    neg_pairs: list[tuple[int, int]]
    seed: int

    def to_text(self, vocabulary: DrugVocabulary) -> str:
        lines = [f"# planted pairs, seed={self.seed}"]
        for label, pairs in (("positive", self.pos_pairs), ("negative", self.neg_pairs)):
            for a, b in pairs:
                lines.append(f"{label}\t{vocabulary.names[a]}|{vocabulary.names[b]}")
        return "\n".join(lines) + "\n"


def drug_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"d{j:0{width}d}" for j in range(n)]


def _draw_rows(rng, count, pairs, spec: SynthSpec, seen: set) -> list[frozenset]:
    rows: list[frozenset] = []
    budget = count * spec.max_attempts_per_row
    while len(rows) < count:
        if budget == 0:
            raise SynthSizeError(
                f"could only draw {len(rows)} of {count} distinct prescriptions; "
                "the combination space is exhausted"
            )
        budget -= 1
        drugs = set()
        if pairs and rng.random() < spec.pair_strength:
            drugs.update(pairs[rng.integers(len(pairs))])
        drugs.update(np.flatnonzero(rng.random(spec.n_drugs) < spec.noise_rate).tolist())
        row = frozenset(drugs)
        if len(row) < 2 or row in seen:
            continue
        seen.add(row)
        rows.append(row)
    return rows


def generate(spec: SynthSpec = SynthSpec()) -> tuple[LabeledDataset, SynthTruth]:
    """Draw a labeled dataset; rows are unique across both classes."""
    rng = np.random.default_rng(spec.seed)
    seen: set = set()
    pos = _draw_rows(rng, spec.n_pos, spec.planted_pos_pairs, spec, seen)
    neg = _draw_rows(rng, spec.n_neg, spec.planted_neg_pairs, spec, seen)
    vocab = DrugVocabulary(tuple(drug_names(spec.n_drugs)))
    data = LabeledDataset(PrescriptionMatrix(tuple(pos), spec.n_drugs), PrescriptionMatrix(tuple(neg), spec.n_drugs), vocab)
    return data, SynthTruth(list(spec.planted_pos_pairs), list(spec.planted_neg_pairs), spec.seed)


def pair_lift(rows, a: int, b: int, n_drugs: int) -> float:
    """Observed co-occurrence of ``(a, b)`` over the mean co-occurrence of all drug pairs."""
    rows = list(rows)
    C = np.zeros((n_drugs, n_drugs))
    for r in rows:
        idx = sorted(r)
        for i in idx:
            for j in idx:
                C[i, j] += 1
    iu = np.triu_indices(n_drugs, k=1)
    background = C[iu].mean()
    return float(C[a, b] / background) if background > 0 else float("inf")

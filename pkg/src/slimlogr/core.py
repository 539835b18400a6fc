"""Shared domain types: drug vocabulary, prescriptions, prescription matrices.

A prescription is a set of drug column ids. A :class:`PrescriptionMatrix` is a
collection of unique prescriptions over ``n_drugs`` columns and converts to a
binary CSR matrix on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

Prescription = frozenset  # frozenset[int] of column ids


class VocabularyMismatchError(ValueError):
    """A drug id or name does not belong to the vocabulary."""


class DatasetError(ValueError):
    """A dataset violates a structural invariant."""


class ParseError(ValueError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class DrugVocabulary:
    names: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        index = {name: i for i, name in enumerate(names)}
        if len(index) != len(names):
            raise DatasetError("drug names in a vocabulary must be unique")
        for name in names:
            if not name or name != name.strip() or "|" in name or "\n" in name:
                raise DatasetError(f"invalid drug name {name!r}")
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self.index

    def encode(self, names: Iterable[str]) -> Prescription:
        try:
            return frozenset(self.index[name] for name in names)
        except KeyError as exc:
            raise VocabularyMismatchError(f"unknown drug {exc.args[0]!r}") from None

    def decode(self, p: Iterable[int]) -> list[str]:
        out = []
        for j in sorted(p):
            if not 0 <= j < len(self.names):
                raise VocabularyMismatchError(f"drug id {j} outside vocabulary of size {len(self)}")
            out.append(self.names[j])
        return out


def make_prescription(ids: Iterable[int], n_drugs: int | None = None) -> Prescription:
    """Validate and freeze a set of drug ids."""
    p = frozenset(int(j) for j in ids)
    if not p:
        raise DatasetError("a prescription must contain at least one drug")
    if min(p) < 0 or (n_drugs is not None and max(p) >= n_drugs):
        raise VocabularyMismatchError(f"prescription {sorted(p)} has ids outside 0..{n_drugs}")
    return p


def to_dense_row(p: Iterable[int], n_drugs: int) -> np.ndarray:
    """Binary indicator vector of length ``n_drugs`` for prescription ``p``."""
    ids = np.fromiter(p, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= n_drugs):
        raise VocabularyMismatchError(f"drug ids {sorted(ids.tolist())} outside vocabulary of size {n_drugs}")
    v = np.zeros(n_drugs)
    v[ids] = 1.0
    return v


def from_dense_row(v: np.ndarray) -> Prescription:
    return frozenset(np.flatnonzero(np.asarray(v)).tolist())


@dataclass(frozen=True)
class PrescriptionMatrix:
    """Unique prescriptions as rows of a binary matrix with ``n_drugs`` columns."""

    rows: tuple[Prescription, ...]
    n_drugs: int

    def __post_init__(self):
        rows = tuple(frozenset(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if self.n_drugs < 0:
            raise DatasetError("n_drugs must be non-negative")
        if len(set(rows)) != len(rows):
            raise DatasetError("prescriptions in a matrix must be unique")
        for r in rows:
            make_prescription(r, self.n_drugs)

    @classmethod
    def from_dense(cls, A: np.ndarray) -> "PrescriptionMatrix":
        A = np.asarray(A)
        return cls(tuple(from_dense_row(a) for a in A), A.shape[1])

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), self.n_drugs

    def to_csr(self) -> sparse.csr_array:
        indptr = np.zeros(len(self.rows) + 1, dtype=np.int64)
        indices = []
        for i, r in enumerate(self.rows):
            indptr[i + 1] = indptr[i] + len(r)
            indices.extend(sorted(r))
        data = np.ones(len(indices))
        return sparse.csr_array(
            (data, np.asarray(indices, dtype=np.int64), indptr), shape=self.shape
        )

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    def subset(self, idx: Sequence[int]) -> "PrescriptionMatrix":
        return PrescriptionMatrix(tuple(self.rows[i] for i in idx), self.n_drugs)


@dataclass(frozen=True)
class LabeledDataset:
    """Positive (ADR-inducing, y=+1) and negative (y=-1) prescriptions."""

    positives: PrescriptionMatrix
    negatives: PrescriptionMatrix
    vocabulary: DrugVocabulary

    def __post_init__(self):
        n = len(self.vocabulary)
        if self.positives.n_drugs != n or self.negatives.n_drugs != n:
            raise VocabularyMismatchError(
                "positives and negatives must share the dataset vocabulary"
            )

    @property
    def n_drugs(self) -> int:
        return len(self.vocabulary)

    def labels(self) -> np.ndarray:
        return np.concatenate([np.ones(len(self.positives)), -np.ones(len(self.negatives))])

    def stacked_csr(self) -> sparse.csr_array:
        return sparse.vstack([self.positives.to_csr(), self.negatives.to_csr()], format="csr")

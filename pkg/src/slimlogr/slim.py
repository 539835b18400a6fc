"""Sparse linear method (SLIM) for drug co-prescription scoring.

Learns a non-negative, zero-diagonal aggregation matrix ``W`` minimising::

    0.5 * ||A - A W||_F^2 + alpha/2 * ||W||_F^2 + lam * ||W||_1

and scores a prescription ``a`` as ``a @ W``.  The objective is a sum of
independent column problems; the solver below iterates every column with its
own step size and stopping test so that a column's trajectory never depends on
the others.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import sparse

from .core import PrescriptionMatrix, VocabularyMismatchError, make_prescription


# rounding allowance in sufficient-decrease tests
_SLACK = 8 * np.finfo(float).eps


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SlimHyper:
    alpha: float = 20.0
    lam: float = 1e-6
    max_iters: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        for name in ("alpha", "lam"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SlimModel:
    W: np.ndarray
    hyper: SlimHyper = field(default_factory=SlimHyper)
    converged: bool = True
    n_iter: int = 0

    @property
    def n_drugs(self) -> int:
        return self.W.shape[0]


def as_matrix(A) -> sparse.csr_array | np.ndarray:
    if isinstance(A, PrescriptionMatrix):
        return A.to_csr()
    if sparse.issparse(A):
        return sparse.csr_array(A)
    return np.asarray(A, dtype=float)


def gram(A) -> np.ndarray:
    """Dense ``A^T A``."""
    A = as_matrix(A)
    G = A.T @ A
    if sparse.issparse(G):
        G = G.toarray()
    return np.asarray(G, dtype=float)


def lipschitz_bound(G: np.ndarray) -> float:
    """Max absolute row sum of ``G``; bounds its spectral norm."""
    if G.size == 0:
        return 0.0
    return float(np.abs(G).sum(axis=1).max())


def smooth_columns(G: np.ndarray, W: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-column value and gradient of ``0.5||A - AW||^2 + alpha/2 ||W||^2``.

    Everything is expressed through the Gram matrix ``G = A^T A``.
    """
    GW = G @ W
    values = (
        0.5 * np.diag(G)
        - np.sum(G * W, axis=0)
        + 0.5 * np.sum(W * GW, axis=0)
        + 0.5 * alpha * np.sum(W * W, axis=0)
    )
    grad = GW - G + alpha * W
    return values, grad


def smooth_objective(A, W: np.ndarray, alpha: float) -> float:
    A = as_matrix(A)
    R = A @ W - A
    if sparse.issparse(R):
        R = R.toarray()
    return 0.5 * float(np.sum(R * R)) + 0.5 * alpha * float(np.sum(W * W))


def smooth_grad(A, W: np.ndarray, alpha: float) -> np.ndarray:
    return smooth_columns(gram(A), W, alpha)[1]


def slim_objective(A, W: np.ndarray, hyper: SlimHyper) -> float:
    A = as_matrix(A)
    n = A.shape[1]
    W = np.asarray(W, dtype=float)
    if W.shape != (n, n):
        raise ValueError(f"W has shape {W.shape}, expected {(n, n)}")
    return smooth_objective(A, W, hyper.alpha) + hyper.lam * float(np.abs(W).sum())


def project_slim(W: np.ndarray) -> np.ndarray:
    W = np.maximum(W, 0.0)
    np.fill_diagonal(W, 0.0)
    return W


@dataclass
class ProxResult:
    W: np.ndarray
    converged: bool
    n_iter: int
    history: list[float]


def prox_gradient_columns(
    value_grad: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    W0: np.ndarray,
    lam: float,
    lipschitz: float,
    max_iters: int,
    tol: float,
    project: Callable[[np.ndarray], np.ndarray] = project_slim,
    callback: Callable[[np.ndarray], None] | None = None,
) -> ProxResult:
    """Projected proximal gradient with per-column backtracking and stopping.

    ``value_grad(W)`` returns the smooth part's per-column values and full
    gradient.  Each step is a gradient step, an ``lam * step`` shrink and a
    projection onto ``W >= 0`` with the zero-diagonal pattern of ``project``.
    Backtracking starts at ``1/lipschitz``; columns meeting the relative
    objective-change test are frozen.
    """
    W = project(np.array(W0, dtype=float))
    k = W.shape[1]
    step = np.full(k, 1.0 / max(lipschitz, 1e-12))
    active = np.ones(k, dtype=bool)
    fvals, grad = value_grad(W)
    F = fvals + lam * np.abs(W).sum(axis=0)
    history = [float(F.sum())]
    it = 0
    while it < max_iters and active.any():
        it += 1
        trial = step.copy()
        while True:
            W_new = project(W - trial * grad - lam * trial)
            W_new[:, ~active] = W[:, ~active]
            f_new, grad_new = value_grad(W_new)
            D = W_new - W
            bound = fvals + np.sum(grad * D, axis=0) + np.sum(D * D, axis=0) / (2 * trial)
            bad = active & (f_new > bound + _SLACK * np.maximum(1.0, np.abs(bound)))
            if not bad.any() or trial[bad].min() < 1e-20:
                break
            trial[bad] *= 0.5
        step = trial
        F_new = f_new + lam * np.abs(W_new).sum(axis=0)
        rel = np.abs(F - F_new) / np.maximum(np.abs(F), 1e-12)
        W, fvals, grad, F = W_new, f_new, grad_new, F_new
        active &= ~(rel < tol)
        history.append(float(F.sum()))
        if callback is not None:
            callback(W)
    return ProxResult(W=W, converged=not active.any(), n_iter=it, history=history)


def train_slim(
    A,
    hyper: SlimHyper = SlimHyper(),
    W0: np.ndarray | None = None,
    columns: Iterable[int] | None = None,
    callback: Callable[[np.ndarray], None] | None = None,
) -> SlimModel:
    """Fit SLIM on prescription matrix ``A``.

    ``columns`` restricts training to a subset of columns (others stay zero).
    ``callback`` receives the full iterate after every step.
    Non-convergence emits :class:`ConvergenceWarning` and returns the last iterate.
    """
    A = as_matrix(A)
    m, n = A.shape
    if m == 0:
        raise ValueError("cannot train SLIM on an empty matrix")
    G = gram(A)
    cols = np.arange(n) if columns is None else np.array(sorted(set(columns)), dtype=int)
    W = np.zeros((n, n)) if W0 is None else np.array(W0, dtype=float)
    if W.shape != (n, n):
        raise ValueError(f"W0 has shape {W.shape}, expected {(n, n)}")
    if n == 1 or cols.size == 0:
        return SlimModel(np.zeros((n, n)), hyper, True, 0)

    Gc = G[:, cols]
    diag_slots = (cols, np.arange(cols.size))

    def value_grad(Wc):
        GW = G @ Wc
        values = (
            0.5 * Gc[diag_slots]
            - np.sum(Gc * Wc, axis=0)
            + 0.5 * np.sum(Wc * GW, axis=0)
            + 0.5 * hyper.alpha * np.sum(Wc * Wc, axis=0)
        )
        return values, GW - Gc + hyper.alpha * Wc

    def project(Wc):
        Wc = np.maximum(Wc, 0.0)
        Wc[diag_slots] = 0.0
        return Wc

    def expand(Wc):
        full = np.zeros((n, n))
        full[:, cols] = Wc
        return full

    res = prox_gradient_columns(
        value_grad,
        W[:, cols],
        hyper.lam,
        lipschitz_bound(G) + hyper.alpha,
        hyper.max_iters,
        hyper.tol,
        project=project,
        callback=None if callback is None else (lambda Wc: callback(expand(Wc))),
    )
    if not res.converged:
        warnings.warn(
            f"SLIM did not converge in {hyper.max_iters} iterations", ConvergenceWarning, stacklevel=2
        )
    return SlimModel(expand(res.W), hyper, res.converged, res.n_iter)


def score(model: SlimModel, a) -> np.ndarray:
    """Recommendation scores ``a @ W`` for every drug.

    Entries for drugs already in ``a`` are included; callers exclude them.
    """
    a = make_prescription(a)
    n = model.n_drugs
    if max(a) >= n:
        raise VocabularyMismatchError(f"drug ids {sorted(a)} outside vocabulary of size {n}")
    return model.W[sorted(a)].sum(axis=0)


def reconstruct(model: SlimModel, A) -> np.ndarray:
    """Score matrix ``A @ W`` (non-negative for a feasible model)."""
    out = as_matrix(A) @ model.W
    return np.asarray(out)

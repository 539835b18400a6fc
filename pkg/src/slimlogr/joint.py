"""Joint SLIM + logistic regression model trained by ADMM.

Two SLIM models (``W_plus`` on ADR-inducing prescriptions, ``W_minus`` on the
rest) feed a shared logistic regression through their reconstructions
``(A Z) * M``.  ADMM splits each ``W`` into a constrained copy ``W`` (carrying
the SLIM terms, non-negativity, zero diagonal and the L1 prox) and a free copy
``Z`` (carrying the label-prediction term), tied by multipliers ``u``.

The label-prediction term is the sum of two full logistic objectives, one per
class, so the ``beta``/``gamma`` penalties on ``x`` enter twice.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import sparse

from . import logreg, slim
from .core import LabeledDataset
from .logreg import LogRHyper, LogRModel
from .slim import SlimHyper, SlimModel

log = logging.getLogger(__name__)

_SLACK = 8 * np.finfo(float).eps

Variant = Literal["inclusive", "exclusive"]
VARIANTS = ("inclusive", "exclusive")


class AdmmDivergenceError(RuntimeError):
    def __init__(self, message: str, trace: "AdmmTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class JointHyper:
    omega: float = 5.0
    alpha: float = 20.0
    lam: float = 1e-6
    beta: float = 1e-6
    gamma: float = 1e-2
    rho_plus: float = 10.0
    rho_minus: float = 10.0
    max_admm_iters: int = 200
    inner_iters: int = 25
    tol: float = 1e-4
    slim_init_iters: int = 500
    logr_init_iters: int = 1000

    def __post_init__(self):
        for name in ("omega", "alpha", "lam", "beta", "gamma", "rho_plus", "rho_minus", "tol"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if self.omega < 0 or min(self.alpha, self.lam, self.beta, self.gamma) < 0:
            raise ValueError("regularisation weights must be non-negative")
        if self.rho_plus <= 0 or self.rho_minus <= 0 or self.tol <= 0:
            raise ValueError("rho and tol must be positive")

    def slim_hyper(self, max_iters: int | None = None) -> SlimHyper:
        return SlimHyper(self.alpha, self.lam, self.slim_init_iters if max_iters is None else max_iters)

    def logr_hyper(self) -> LogRHyper:
        return LogRHyper(self.beta, self.gamma, self.logr_init_iters)


@dataclass
class AdmmState:
    W_plus: np.ndarray
    W_minus: np.ndarray
    Z_plus: np.ndarray
    Z_minus: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    x: np.ndarray
    c: float
    iter: int = 0
    primal_residual: float = 0.0
    dual_residual: float = 0.0

    @property
    def n_drugs(self) -> int:
        return self.W_plus.shape[0]

    def copy(self) -> "AdmmState":
        return AdmmState(
            *(np.array(getattr(self, k)) for k in ("W_plus", "W_minus", "Z_plus", "Z_minus", "u_plus", "u_minus", "x")),
            c=self.c,
            iter=self.iter,
            primal_residual=self.primal_residual,
            dual_residual=self.dual_residual,
        )


@dataclass
class AdmmTrace:
    lagrangian: list[float] = field(default_factory=list)
    primal: list[float] = field(default_factory=list)
    dual: list[float] = field(default_factory=list)
    converged: bool = False
    n_iter: int = 0


@dataclass(frozen=True)
class JointModel:
    W_plus: SlimModel
    W_minus: SlimModel
    logr: LogRModel
    variant: str = "inclusive"
    hyper: JointHyper = field(default_factory=JointHyper)
    trace: AdmmTrace | None = field(default=None, compare=False, repr=False)

    @property
    def n_drugs(self) -> int:
        return self.W_plus.n_drugs


def vec(M: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(M).ravel(order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def make_mask(A, variant: str) -> np.ndarray:
    """All ones (inclusive) or the indicator of ``A`` (exclusive)."""
    A = slim.as_matrix(A)
    if variant == "inclusive":
        return np.ones(A.shape)
    if variant == "exclusive":
        dense = A.toarray() if sparse.issparse(A) else np.asarray(A)
        return (dense != 0).astype(float)
    raise ValueError(f"unknown variant {variant!r}")


def masked_features(A, Z: np.ndarray, M: np.ndarray) -> np.ndarray:
    return np.asarray(A @ Z) * M


def admm_residuals(state: AdmmState, Z_plus_prev=None, Z_minus_prev=None, rho_plus=10.0, rho_minus=10.0):
    """Primal ``sum ||W - Z||`` and dual ``sum rho ||Z_k+1 - Z_k||`` residuals."""
    primal = float(np.linalg.norm(state.W_plus - state.Z_plus) + np.linalg.norm(state.W_minus - state.Z_minus))
    dual = 0.0
    if Z_plus_prev is not None:
        dual += rho_plus * float(np.linalg.norm(state.Z_plus - Z_plus_prev))
    if Z_minus_prev is not None:
        dual += rho_minus * float(np.linalg.norm(state.Z_minus - Z_minus_prev))
    return primal, dual


@dataclass
class _Problem:
    """Precomputed per-class data for one training run."""

    A_plus: np.ndarray
    A_minus: np.ndarray
    M_plus: np.ndarray
    M_minus: np.ndarray
    G_plus: np.ndarray
    G_minus: np.ndarray
    hyper: JointHyper

    @classmethod
    def build(cls, data: LabeledDataset, variant: str, hyper: JointHyper) -> "_Problem":
        # dense: the masks are m x n already, and dense products are faster here
        Ap, Am = data.positives.to_dense(), data.negatives.to_dense()
        return cls(Ap, Am, make_mask(Ap, variant), make_mask(Am, variant), slim.gram(Ap), slim.gram(Am), hyper)

    def features(self, Z_plus, Z_minus) -> np.ndarray:
        return np.vstack([masked_features(self.A_plus, Z_plus, self.M_plus), masked_features(self.A_minus, Z_minus, self.M_minus)])

    def labels(self) -> np.ndarray:
        return np.concatenate([np.ones(self.A_plus.shape[0]), -np.ones(self.A_minus.shape[0])])


def _label_term(F: np.ndarray, y: np.ndarray, x: np.ndarray, c: float, hyper: JointHyper) -> float:
    # LogR(y+|.) + LogR(y-|.), each carrying its own penalty on x
    penalty = 0.5 * hyper.beta * float(x @ x) + hyper.gamma * float(np.abs(x).sum())
    return logreg.logloss(F, y, x, c) + 2.0 * penalty


def lagrangian(state: AdmmState, data, masks, hyper: JointHyper) -> float:
    """Augmented Lagrangian at ``state``.

    ``data`` is a :class:`LabeledDataset` (or a ``(A_plus, A_minus)`` pair) and
    ``masks`` the ``(M_plus, M_minus)`` pair from :func:`make_mask`.
    """
    if isinstance(data, LabeledDataset):
        A_plus, A_minus = data.positives.to_csr(), data.negatives.to_csr()
    else:
        A_plus, A_minus = (slim.as_matrix(a) for a in data)
    M_plus, M_minus = masks
    n = state.n_drugs
    if A_plus.shape[1] != n or A_minus.shape[1] != n or state.u_plus.shape != (n * n,):
        raise ValueError("state and data shapes disagree")
    sh = SlimHyper(hyper.alpha, hyper.lam)
    total = slim.slim_objective(A_plus, state.W_plus, sh) + slim.slim_objective(A_minus, state.W_minus, sh)
    if hyper.omega != 0:
        F_plus = masked_features(A_plus, state.Z_plus, M_plus)
        F_minus = masked_features(A_minus, state.Z_minus, M_minus)
        F = np.vstack([F_plus, F_minus])
        y = np.concatenate([np.ones(F_plus.shape[0]), -np.ones(F_minus.shape[0])])
        total += hyper.omega * _label_term(F, y, state.x, state.c, hyper)
    for W, Z, u, rho in (
        (state.W_plus, state.Z_plus, state.u_plus, hyper.rho_plus),
        (state.W_minus, state.Z_minus, state.u_minus, hyper.rho_minus),
    ):
        v = vec(W - Z)
        total += float(u @ v) + 0.5 * rho * float(v @ v)
    return float(total)


def joint_objective(W_plus, W_minus, x, c, data: LabeledDataset, variant: str, hyper: JointHyper) -> float:
    """The joint objective with ``Z = W`` (no coupling terms)."""
    n = data.n_drugs
    st = AdmmState(W_plus, W_minus, W_plus, W_minus, np.zeros(n * n), np.zeros(n * n), np.asarray(x, float), c)
    masks = (make_mask(data.positives, variant), make_mask(data.negatives, variant))
    return lagrangian(st, data, masks, hyper)


# subproblem pieces; each returns the smooth value and its gradient


def w_subproblem_value_grad(G: np.ndarray, W: np.ndarray, Z: np.ndarray, U: np.ndarray, alpha: float, rho: float):
    """Per-column value and gradient of the smooth part of the W-update.

    ``0.5||A - AW||^2 + alpha/2||W||^2 + <U, W - Z> + rho/2 ||W - Z||^2``
    (the L1 term and constraints are handled by the prox).
    """
    values, grad = slim.smooth_columns(G, W, alpha)
    D = W - Z
    values = values + np.sum(U * D, axis=0) + 0.5 * rho * np.sum(D * D, axis=0)
    return values, grad + U + rho * D


def z_subproblem_value_grad(A, M: np.ndarray, y_sign: float, Z: np.ndarray, W: np.ndarray, U: np.ndarray,
                            x: np.ndarray, c: float, omega: float, rho: float):
    """Value and gradient of ``omega * logloss(y | (A Z) * M) + <U, W - Z> + rho/2 ||W - Z||^2``."""
    F = masked_features(A, Z, M)
    t = F @ x + c
    value = omega * float(np.sum(logreg.softplus(-y_sign * t)))
    dt = -y_sign * logreg.expit(-y_sign * t)
    dF = np.outer(dt, x) * M
    grad = omega * np.asarray(A.T @ dF)
    D = W - Z
    value += float(np.sum(U * D)) + 0.5 * rho * float(np.sum(D * D))
    grad += -U - rho * D
    return value, grad


def xc_subproblem_value_grad(F: np.ndarray, y: np.ndarray, x: np.ndarray, c: float, omega: float, beta: float):
    """Smooth part of the (x, c)-update: ``omega * (logloss + 2 * beta/2 ||x||^2)``."""
    value, gx, gc = logreg.smooth_value_grad(F, y, x, c, 2.0 * beta)
    return omega * value, omega * gx, omega * gc


def _update_w(G, W, Z, U, hyper: JointHyper, rho: float) -> np.ndarray:
    res = slim.prox_gradient_columns(
        lambda Wc: w_subproblem_value_grad(G, Wc, Z, U, hyper.alpha, rho),
        W,
        hyper.lam,
        slim.lipschitz_bound(G) + hyper.alpha + rho,
        hyper.inner_iters,
        1e-14,
    )
    return res.W


def _update_z(A, M, G, y_sign, Z, W, U, x, c, hyper: JointHyper, rho: float) -> np.ndarray:
    def fg(Zc):
        return z_subproblem_value_grad(A, M, y_sign, Zc, W, U, x, c, hyper.omega, rho)

    L = rho + 0.25 * hyper.omega * float(x @ x) * slim.lipschitz_bound(G)
    step = 1.0 / L
    f, g = fg(Z)
    for _ in range(hyper.inner_iters):
        gg = float(np.sum(g * g))
        if gg == 0.0:
            break
        while True:
            Z_new = Z - step * g
            f_new, g_new = fg(Z_new)
            if f_new <= f - 0.5 * step * gg + _SLACK * max(1.0, abs(f)):
                break
            step *= 0.5
            if step < 1e-30:
                return Z
        Z, f, g = Z_new, f_new, g_new
        step *= 2.0
    return Z


def initial_state(data: LabeledDataset, hyper: JointHyper, slim_plus: SlimModel | None = None,
                  slim_minus: SlimModel | None = None, logr0: LogRModel | None = None) -> AdmmState:
    """Iteration-0 state: SLIM-only W = Z, LogR-only (x, c), zero multipliers."""
    n = data.n_drugs
    if slim_plus is None:
        slim_plus = slim.train_slim(data.positives, hyper.slim_hyper())
    if slim_minus is None:
        slim_minus = slim.train_slim(data.negatives, hyper.slim_hyper())
    if logr0 is None:
        logr0 = logreg.train_logr(data.stacked_csr(), data.labels(), hyper.logr_hyper())
    Wp, Wm = np.array(slim_plus.W), np.array(slim_minus.W)
    return AdmmState(Wp, Wm, Wp.copy(), Wm.copy(), np.zeros(n * n), np.zeros(n * n), np.array(logr0.x), float(logr0.c))


def admm_step(state: AdmmState, prob: _Problem) -> AdmmState:
    """One outer iteration: W-, Z-, (x, c)- and dual updates."""
    h = prob.hyper
    n = state.n_drugs
    s = state.copy()
    Up, Um = unvec(s.u_plus, n), unvec(s.u_minus, n)
    s.W_plus = _update_w(prob.G_plus, s.W_plus, s.Z_plus, Up, h, h.rho_plus)
    s.W_minus = _update_w(prob.G_minus, s.W_minus, s.Z_minus, Um, h, h.rho_minus)
    Zp_prev, Zm_prev = s.Z_plus, s.Z_minus
    s.Z_plus = _update_z(prob.A_plus, prob.M_plus, prob.G_plus, 1.0, s.Z_plus, s.W_plus, Up, s.x, s.c, h, h.rho_plus)
    s.Z_minus = _update_z(prob.A_minus, prob.M_minus, prob.G_minus, -1.0, s.Z_minus, s.W_minus, Um, s.x, s.c, h, h.rho_minus)
    if h.omega > 0:
        F = prob.features(s.Z_plus, s.Z_minus)
        fit = logreg.train_logr(F, prob.labels(), LogRHyper(2 * h.beta, 2 * h.gamma, h.inner_iters, 1e-12),
                                x0=s.x, c0=s.c, warn=False)
        s.x, s.c = np.array(fit.x), float(fit.c)
    s.u_plus = s.u_plus + h.rho_plus * vec(s.W_plus - s.Z_plus)
    s.u_minus = s.u_minus + h.rho_minus * vec(s.W_minus - s.Z_minus)
    s.iter = state.iter + 1
    s.primal_residual, s.dual_residual = admm_residuals(s, Zp_prev, Zm_prev, h.rho_plus, h.rho_minus)
    return s


def train_joint(data: LabeledDataset, hyper: JointHyper = JointHyper(), variant: str = "inclusive",
                init: AdmmState | None = None) -> JointModel:
    """Fit the joint model; stops when both residuals drop below ``tol * n``."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if len(data.positives) == 0 or len(data.negatives) == 0:
        raise ValueError("both classes need at least one prescription")
    prob = _Problem.build(data, variant, hyper)
    masks = (prob.M_plus, prob.M_minus)
    state = initial_state(data, hyper) if init is None else init
    n = data.n_drugs
    trace = AdmmTrace()
    L0 = lagrangian(state, (prob.A_plus, prob.A_minus), masks, hyper)
    trace.lagrangian.append(L0)
    threshold = hyper.tol * n
    for _ in range(hyper.max_admm_iters):
        state = admm_step(state, prob)
        L = lagrangian(state, (prob.A_plus, prob.A_minus), masks, hyper)
        trace.lagrangian.append(L)
        trace.primal.append(state.primal_residual)
        trace.dual.append(state.dual_residual)
        trace.n_iter = state.iter
        if not np.isfinite(L) or L > 10.0 * abs(L0) + 1e-12:
            raise AdmmDivergenceError(
                f"ADMM diverged at iteration {state.iter}: Lagrangian {L:.6g} vs initial {L0:.6g}, "
                f"primal {state.primal_residual:.3g}, dual {state.dual_residual:.3g}",
                trace,
            )
        if state.primal_residual < threshold and state.dual_residual < threshold:
            trace.converged = True
            break
    log.debug("ADMM stopped after %d iterations (converged=%s)", trace.n_iter, trace.converged)
    sh = hyper.slim_hyper()
    return JointModel(
        W_plus=SlimModel(slim.project_slim(state.W_plus), sh, trace.converged, trace.n_iter),
        W_minus=SlimModel(slim.project_slim(state.W_minus), sh, trace.converged, trace.n_iter),
        logr=LogRModel(state.x, state.c, hyper.logr_hyper(), trace.converged, trace.n_iter),
        variant=variant,
        hyper=hyper,
        trace=trace,
    )


def train_separate(data: LabeledDataset, hyper: JointHyper = JointHyper()) -> JointModel:
    """SLIM+ / SLIM- / LogR fitted independently (LogR on the binary prescriptions)."""
    init = initial_state(data, hyper)
    sh = hyper.slim_hyper()
    return JointModel(
        W_plus=SlimModel(init.W_plus, sh),
        W_minus=SlimModel(init.W_minus, sh),
        logr=LogRModel(init.x, init.c, hyper.logr_hyper()),
        variant="separate",
        hyper=replace(hyper, omega=0.0),
    )

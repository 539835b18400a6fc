"""Elastic-net logistic regression for ADR label prediction.

Objective over weights ``x`` and bias ``c`` (labels ``y`` in {+1, -1})::

    sum_i log(1 + exp(-y_i (f_i . x + c))) + beta/2 ||x||^2 + gamma ||x||_1

The bias is never penalised.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import expit

from .slim import _SLACK, ConvergenceWarning


@dataclass(frozen=True)
class LogRHyper:
    beta: float = 1e-6
    gamma: float = 1e-2
    max_iters: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        for name in ("beta", "gamma"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class LogRModel:
    x: np.ndarray
    c: float = 0.0
    hyper: LogRHyper = field(default_factory=LogRHyper)
    converged: bool = True
    n_iter: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if not (np.all(np.isfinite(x)) and np.isfinite(self.c)):
            raise ValueError("LogR parameters must be finite")

    @property
    def n_features(self) -> int:
        return self.x.shape[0]


def softplus(z: np.ndarray) -> np.ndarray:
    """``log(1 + exp(z))`` without overflow."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def decision(F, x: np.ndarray, c: float) -> np.ndarray:
    return np.asarray(F @ x).ravel() + c


def predict_proba(model: LogRModel, f, y: int = 1) -> float | np.ndarray:
    """``p(y | f) = 1 / (1 + exp(-y (f . x + c)))`` for one vector or a matrix of rows."""
    if y not in (1, -1):
        raise ValueError("label must be +1 or -1")
    f = f if sparse.issparse(f) else np.asarray(f, dtype=float)
    if f.shape[-1] != model.n_features:
        raise ValueError(f"feature length {f.shape[-1]} != model length {model.n_features}")
    if f.ndim == 1:
        return float(expit(y * (float(f @ model.x) + model.c)))
    return expit(y * decision(f, model.x, model.c))


def logloss(F, y: np.ndarray, x: np.ndarray, c: float) -> float:
    return float(np.sum(softplus(-y * decision(F, x, c))))


def smooth_value_grad(F, y: np.ndarray, x: np.ndarray, c: float, beta: float):
    """Log-loss plus ``beta/2 ||x||^2``: value, gradient in ``x``, derivative in ``c``."""
    t = decision(F, x, c)
    dt = -y * expit(-y * t)
    value = float(np.sum(softplus(-y * t))) + 0.5 * beta * float(x @ x)
    gx = np.asarray(F.T @ dt).ravel() + beta * x
    return value, gx, float(dt.sum())


def logr_objective(F, y: np.ndarray, x: np.ndarray, c: float, hyper: LogRHyper) -> float:
    return smooth_value_grad(F, y, x, c, hyper.beta)[0] + hyper.gamma * float(np.abs(x).sum())


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def train_logr(
    F,
    y,
    hyper: LogRHyper = LogRHyper(),
    x0: np.ndarray | None = None,
    c0: float = 0.0,
    warn: bool = True,
) -> LogRModel:
    """Monotone accelerated proximal gradient with backtracking.

    The bias is never thresholded.  Stops once the proximal gradient mapping
    at the returned point (the plain gradient when ``gamma == 0``) has norm
    below ``hyper.tol``.  The objective never increases between iterates.
    """
    F = sparse.csr_array(F) if sparse.issparse(F) else np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    m, n = F.shape
    if m < 1:
        raise ValueError("need at least one training row")
    if y.shape[0] != m or not np.all(np.isin(y, (1.0, -1.0))):
        raise ValueError("labels must be a +1/-1 vector with one entry per row")
    beta, gamma = hyper.beta, hyper.gamma

    def smooth(theta):
        return smooth_value_grad(F, y, theta[:-1], theta[-1], beta)

    def total(theta, f):
        return f + gamma * float(np.abs(theta[:-1]).sum())

    def prox(v, t):
        out = v.copy()
        out[:-1] = soft_threshold(v[:-1], t * gamma)
        return out

    def prox_step(theta, f, g, t):
        # backtracking from step t; returns (point, smooth value, step)
        while True:
            new = prox(theta - t * g, t)
            f_new, gx, gc = smooth(new)
            d = new - theta
            if f_new <= f + float(g @ d) + float(d @ d) / (2 * t) + _SLACK * max(1.0, abs(f)) or t < 1e-30:
                return new, f_new, t
            t *= 0.5

    theta = np.append(np.zeros(n) if x0 is None else np.array(x0, dtype=float), float(c0))
    f, gx, gc = smooth(theta)
    g = np.append(gx, gc)
    F_cur = total(theta, f)
    t = 1.0
    momentum, s = theta.copy(), 1.0
    converged = False
    it = 0
    while True:
        # convergence is judged by the plain proximal step at the current iterate
        probe, _, t_probe = prox_step(theta, f, g, t)
        if np.linalg.norm(probe - theta) / t_probe < hyper.tol:
            converged = True
            break
        if it >= hyper.max_iters:
            break
        it += 1
        fm, gxm, gcm = smooth(momentum)
        z, fz, t = prox_step(momentum, fm, np.append(gxm, gcm), min(t, t_probe) * 2.0)
        Fz = total(z, fz)
        s_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * s * s))
        if Fz <= F_cur:
            momentum = z + ((s - 1.0) / s_new) * (z - theta)
            theta, f, F_cur = z, fz, Fz
        else:
            # monotone safeguard: keep theta, restart momentum from the better point
            momentum = theta + (s / s_new) * (z - theta)
        s = s_new
        f, gx, gc = smooth(theta)
        g = np.append(gx, gc)
    if warn and not converged:
        warnings.warn(
            f"LogR did not converge in {hyper.max_iters} iterations", ConvergenceWarning, stacklevel=2
        )
    return LogRModel(theta[:-1], float(theta[-1]), hyper, converged, it)

"""Loss values, empirical risk, risk gradient, and the empirical Hessian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import HUBER, LOGISTIC, QUADRATIC, DataError, Dataset, LossSpec, as_theta


class KinkError(ValueError):
    """A Huber residual sits too close to the clip level for finite differences."""


@dataclass(frozen=True, eq=False)
class RiskReport:
    """Empirical risk with its gradient and gradient sup-norm."""

    value: float
    grad: np.ndarray
    grad_inf_norm: float


def huber_psi(u, clip: float):
    """Derivative of the Huber function: the identity clipped at +-clip."""
    if not clip > 0:
        raise DataError("clip level must be positive")
    return np.clip(u, -clip, clip)


def huber_phi(u, clip: float):
    """Huber function: quadratic inside [-clip, clip], linear outside."""
    if not clip > 0:
        raise DataError("clip level must be positive")
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    return np.where(a <= clip, 0.5 * u * u, clip * a - 0.5 * clip * clip)


def _logistic_check_y(y: np.ndarray):
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError("logistic loss requires responses in {0, 1}")


def _predictions(ds: Dataset, theta) -> np.ndarray:
    t = as_theta(theta)
    if t.size != ds.m:
        raise DataError(f"theta length {t.size} != number of columns {ds.m}")
    return ds.x @ t


def empirical_risk(ds: Dataset, theta, loss: LossSpec) -> float:
    """Mean of the per-observation loss gamma(y_i, x_i . theta)."""
    u = _predictions(ds, theta)
    if loss.kind == QUADRATIC:
        res = ds.y - u
        return float(np.mean(0.5 * res * res))
    if loss.kind == HUBER:
        return float(np.mean(huber_phi(ds.y - u, loss.clip)))
    if loss.kind == LOGISTIC:
        _logistic_check_y(ds.y)
        # -y*u + log(1 + e^u), evaluated stably
        return float(np.mean(-ds.y * u + np.logaddexp(0.0, u)))
    raise DataError(f"unknown loss kind {loss.kind!r}")


def risk_gradient(ds: Dataset, theta, loss: LossSpec) -> RiskReport:
    """Gradient of the empirical risk.

    Regression losses follow the chain rule through the residual y - x.theta,
    so grad_j = -(1/n) sum_i psi(y_i - x_i.theta) x_ij with psi the scalar loss
    derivative; the logistic gradient is (1/n) X^T (sigma(u) - y).
    """
    u = _predictions(ds, theta)
    n = ds.n
    if loss.kind == QUADRATIC:
        grad = -(ds.x.T @ (ds.y - u)) / n
    elif loss.kind == HUBER:
        grad = -(ds.x.T @ huber_psi(ds.y - u, loss.clip)) / n
    elif loss.kind == LOGISTIC:
        _logistic_check_y(ds.y)
        sig = 1.0 / (1.0 + np.exp(-u))
        grad = (ds.x.T @ (sig - ds.y)) / n
    else:
        raise DataError(f"unknown loss kind {loss.kind!r}")
    value = empirical_risk(ds, theta, loss)
    return RiskReport(value=value, grad=grad, grad_inf_norm=float(np.max(np.abs(grad))))


def empirical_hessian(ds: Dataset, theta, loss: LossSpec) -> np.ndarray:
    """Empirical Hessian of the Huber risk at theta.

    Entry (j, k) averages 1{|y_i - x_i.theta| <= clip} x_ij x_ik; under the
    linear model the residual equals the noise plus the prediction gap, so this
    indicator coincides with the model-based one.
    """
    if loss.kind != HUBER:
        raise DataError("the empirical Hessian is defined for the Huber loss only")
    res = ds.y - _predictions(ds, theta)
    inside = (np.abs(res) <= loss.clip).astype(float)
    xw = ds.x * inside[:, None]
    return (xw.T @ ds.x) / ds.n


def grad_check(ds: Dataset, theta, loss: LossSpec, h: float = 1e-6) -> float:
    """Central-difference audit of risk_gradient.

    Returns max_j |fd_j - grad_j| / max(1, |grad_j|). For the Huber loss every
    residual must stay at least 10*h away from the clip level, otherwise the
    finite difference straddles the kink and the check is rejected.
    """
    if not h > 0:
        raise DataError("step size h must be positive")
    t = as_theta(theta).copy()
    if loss.kind == HUBER:
        res = ds.y - ds.x @ t
        gap = np.abs(np.abs(res) - loss.clip)
        if np.min(gap) < 10.0 * h:
            i = int(np.argmin(gap))
            raise KinkError(
                f"residual {i} is within {gap[i]:.3g} of the clip level "
                f"{loss.clip:.6g}; finite differences need a margin of 10*h = {10 * h:.3g}"
            )
    grad = risk_gradient(ds, t, loss).grad
    fd = np.empty_like(grad)
    for j in range(t.size):
        tp = t.copy()
        tm = t.copy()
        tp[j] += h
        tm[j] -= h
        fd[j] = (empirical_risk(ds, tp, loss) - empirical_risk(ds, tm, loss)) / (2.0 * h)
    rel = np.abs(fd - grad) / np.maximum(1.0, np.abs(grad))
    return float(np.max(rel))

"""Gram/coherence/restricted-eigenvalue diagnostics, theoretical tuning, the
constants chain C1..C4, margin constants, and the bound calculators."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HUBER, LOGISTIC, DataError, Dataset, LossSpec

log = logging.getLogger(__name__)


def r_tilde_value(l_bound: float, m: int, n: int) -> float:
    """Base tuning quantity 4*sqrt(2)*L*log(M)/n + 2*sqrt(6)*sqrt(log(M)/n)."""
    if m < 2:
        raise DataError("tuning requires at least two dictionary columns (M >= 2)")
    if n < 1:
        raise DataError("tuning requires n >= 1")
    if not l_bound > 0:
        raise DataError("l_bound must be positive")
    lm = math.log(m) / n
    return 4.0 * math.sqrt(2.0) * l_bound * lm + 2.0 * math.sqrt(6.0) * math.sqrt(lm)


def tuning(loss: LossSpec, l_bound: float, m: int, n: int) -> dict:
    """Theoretical tuning pair: r_tilde from the dictionary geometry and
    r = 6 * lipschitz * r_tilde. Natural logs throughout.

    Warns (never errors) when r_tilde > 1 or K, L leave [1, sqrt(n / log M)],
    the regime the theory assumes. The quadratic loss has no Lipschitz bound
    and is rejected: supply r explicitly.
    """
    lip = loss.lipschitz()  # raises for quadratic
    r_tilde = r_tilde_value(l_bound, m, n)
    if r_tilde > 1.0:
        log.warning("r_tilde = %.4g exceeds 1; the oracle bounds assume r_tilde <= 1", r_tilde)
    hi = math.sqrt(n / math.log(m))
    if not (1.0 <= l_bound <= hi):
        log.warning("L = %.4g outside [1, sqrt(n/log M)] = [1, %.4g]", l_bound, hi)
    if loss.k_bound is not None and not (1.0 <= loss.k_bound <= hi):
        log.warning("K = %.4g outside [1, sqrt(n/log M)] = [1, %.4g]", loss.k_bound, hi)
    return {"r_tilde": r_tilde, "r": 6.0 * lip * r_tilde}


def gram(ds: Dataset, tol: float = 1e-8) -> np.ndarray:
    """Empirical Gram matrix X^T X / n; rejects unnormalized columns."""
    g = ds.x.T @ ds.x / ds.n
    if np.max(np.abs(np.diag(g) - 1.0)) > tol:
        raise DataError("columns are not normalized to unit empirical norm")
    return g


def coherence(g: np.ndarray) -> dict:
    """Largest absolute off-diagonal entry and where it occurs."""
    if g.shape[0] < 2:
        return {"max_offdiag": 0.0, "argmax": (0, 0)}
    off = np.abs(g - np.diag(np.diag(g)))
    j, k = np.unravel_index(int(np.argmax(off)), off.shape)
    return {"max_offdiag": float(off[j, k]), "argmax": (int(j), int(k))}


def coherence_check(g: np.ndarray, s: int, beta: float) -> dict:
    """Mutual coherence condition: max off-diagonal <= 1/(3*beta*s)."""
    if s < 1:
        raise DataError("sparsity s must be >= 1")
    if not beta > 1:
        raise DataError("beta must exceed 1")
    c = coherence(g)
    threshold = 1.0 / (3.0 * beta * s)
    return {
        "max_offdiag": c["max_offdiag"],
        "argmax": c["argmax"],
        "threshold": threshold,
        "passes": bool(c["max_offdiag"] <= threshold),
    }


def re_lower_bound(beta: float) -> float:
    """Restricted-eigenvalue lower bound sqrt(1 - 1/beta) under coherence."""
    if not beta > 1:
        raise DataError("beta must exceed 1")
    return math.sqrt(1.0 - 1.0 / beta)


def _project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius."""
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, a.size + 1)
    rho = np.max(np.flatnonzero(u - (css - radius) / ks > 0)) + 1
    lam = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - lam, 0.0)


def re_estimate(g: np.ndarray, s: int, n_samples: int = 200, seed: int = 0) -> float:
    """Upper estimate of the restricted eigenvalue zeta(s).

    Enumerates all size-s supports, samples cone directions (off-support l1
    mass at most the on-support l1 mass) and refines each by projected
    gradient descent on Delta^T G Delta / |Delta_J|_2^2. The true minimum can
    only be lower, so the returned value is an upper estimate; the exact
    quantity is NP-hard in general.
    """
    m = g.shape[0]
    if m > 12:
        raise DataError("re_estimate supports at most 12 columns")
    if not 1 <= s <= m:
        raise DataError("need 1 <= s <= M")
    rng = np.random.default_rng(seed)
    best = np.inf

    def ratio(delta, j_mask):
        on2 = float(np.sum(delta[j_mask] ** 2))
        if on2 <= 0:
            return np.inf
        return float(delta @ g @ delta) / on2

    for combo in itertools.combinations(range(m), s):
        j_mask = np.zeros(m, dtype=bool)
        j_mask[list(combo)] = True
        starts = []
        on0 = rng.standard_normal((1, s))  # plus a pure on-support start: exact for G = I
        starts.append((on0[0], np.zeros(m - s)))
        for _ in range(n_samples):
            on = rng.standard_normal(s)
            off = rng.standard_normal(m - s)
            off_l1 = np.sum(np.abs(off))
            budget = rng.uniform(0.0, 1.0) * np.sum(np.abs(on))
            if off_l1 > 0:
                off = off * (budget / off_l1)
            starts.append((on, off))
        for on, off in starts:
            delta = np.zeros(m)
            delta[j_mask] = on
            delta[~j_mask] = off
            val = ratio(delta, j_mask)
            best = min(best, val)
            # projected gradient refinement
            step = 0.1
            for _ in range(150):
                on2 = float(np.sum(delta[j_mask] ** 2))
                if on2 <= 0:
                    break
                gd = g @ delta
                quad = float(delta @ gd)
                grad = 2.0 * gd / on2
                grad[j_mask] -= 2.0 * quad * delta[j_mask] / (on2 * on2)
                cand = delta - step * grad
                cand[~j_mask] = _project_l1_ball(
                    cand[~j_mask], float(np.sum(np.abs(cand[j_mask])))
                )
                new_val = ratio(cand, j_mask)
                if new_val < val - 1e-14:
                    delta, val = cand, new_val
                    best = min(best, val)
                else:
                    step *= 0.5
                    if step < 1e-6:
                        break
    return float(math.sqrt(max(best, 0.0)))


@dataclass(frozen=True)
class ConstantsReport:
    """The theoretical constants chain with every input recorded."""

    r_tilde: float
    r: float
    zeta_lower: float
    kappa: float
    c_margin: float
    c1: float
    c2: float
    c3: float
    c4: float
    eta: float
    rho_threshold: float
    inputs: dict = field(default_factory=dict)
    side_conditions: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "r_tilde": self.r_tilde,
            "r": self.r,
            "zeta_lower": self.zeta_lower,
            "kappa": self.kappa,
            "c_margin": self.c_margin,
            "C1": self.c1,
            "C2": self.c2,
            "C3": self.c3,
            "C4": self.c4,
            "eta": self.eta,
            "rho_threshold": self.rho_threshold,
            "inputs": dict(self.inputs),
            "side_conditions": dict(self.side_conditions),
        }


def margin_constant_huber(p_alpha: float) -> dict:
    """Margin constants for the Huber regression loss: kappa = 2, c = sqrt(2/p_alpha)."""
    if not 0.0 < p_alpha <= 1.0:
        raise DataError("p_alpha must lie in (0, 1]")
    if p_alpha < 1e-6:
        log.warning("p_alpha = %.3g is tiny; the margin constant c blows up", p_alpha)
    return {"kappa": 2.0, "c": math.sqrt(2.0 / p_alpha)}


def constants_chain(
    k_bound: float,
    alpha: float,
    l_bound: float,
    m: int,
    n: int,
    s: int,
    beta: float,
    p_alpha: float,
    p_clip: float,
    r: float | None = None,
) -> ConstantsReport:
    """Evaluate C1 -> C2 -> C3 -> C4, eta, and the sign threshold 2*C4*r.

    r defaults to the theoretical Huber tuning; the side-condition flags report
    whether the regime assumptions hold (they rarely do at desk scale; the
    chain is still evaluated so the conservatism is visible).
    """
    if not (0.0 < p_alpha <= 1.0 and 0.0 < p_clip <= 1.0):
        raise DataError("p_alpha and p_clip must lie in (0, 1]")
    if not beta > 1:
        raise DataError("beta must exceed 1")
    if s < 1:
        raise DataError("sparsity s must be >= 1")
    loss = LossSpec.huber(k_bound, alpha)
    t = tuning(loss, l_bound, m, n)
    r_tilde = t["r_tilde"]
    if r is None:
        r = t["r"]

    c1 = 8.0 * (1.0 + 2.0 * k_bound) * beta / (p_alpha * (beta - 1.0)) + 1.0 / 6.0
    c2 = 2.0 * math.sqrt(1.0 + (1.0 + l_bound**2) * (8.0 * c1 * l_bound**3 + 4.0 * l_bound / s)) + (
        1.0 + l_bound**2
    ) / 3.0
    c3 = 1.0 / (3.0 * beta) + 12.0 * l_bound**3 * c1 + c2 / (math.sqrt(n) * s)
    c4 = (4.0 + 2.0 * c1 * c3) / p_clip
    eta = c1 * r * s
    margin = margin_constant_huber(p_alpha)
    hi = math.sqrt(n / math.log(m))
    side = {
        "sparsity_vs_r": bool(s <= 1.0 / math.sqrt(r)),
        "hessian_perturbation": bool(
            12.0 * l_bound**3 * eta + l_bound * r_tilde + c2 / (math.sqrt(n) * s * s)
            <= p_clip / 2.0
        ),
        "k_l_range": bool(1.0 <= k_bound <= hi and 1.0 <= l_bound <= hi),
        "r_tilde_le_1": bool(r_tilde <= 1.0),
    }
    return ConstantsReport(
        r_tilde=r_tilde,
        r=float(r),
        zeta_lower=re_lower_bound(beta),
        kappa=margin["kappa"],
        c_margin=margin["c"],
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        eta=eta,
        rho_threshold=2.0 * c4 * r,
        inputs={
            "L": l_bound,
            "K": k_bound,
            "alpha": alpha,
            "M": m,
            "n": n,
            "s": s,
            "beta": beta,
            "p_alpha": p_alpha,
            "p_clip": p_clip,
            "lipschitz": loss.lipschitz(),
        },
        side_conditions=side,
    )


def theorem1_bounds(cr: ConstantsReport, s: int, kappa: float, c_margin: float, zeta: float) -> dict:
    """Generic oracle-inequality calculators for excess risk and l1 estimation.

    excess: (2(1+2K) c r sqrt(s) / zeta)^(kappa/(kappa-1))
            + 12 * lipschitz * kappa/(kappa-1) * r_tilde^2
    l1:     (2 c sqrt(s) / zeta)^(kappa/(kappa-1)) ((1+2K) r)^(1/(kappa-1))
            + 2K / ((kappa-1)(1+2K)) * r_tilde
    """
    if not (1.0 < kappa <= 2.0):
        raise DataError("kappa must lie in (1, 2]")
    if not zeta > 0:
        raise DataError("zeta must be positive")
    k = cr.inputs["K"]
    lip = cr.inputs["lipschitz"]
    expo = kappa / (kappa - 1.0)
    excess = (2.0 * (1.0 + 2.0 * k) * c_margin * cr.r * math.sqrt(s) / zeta) ** expo
    excess += 12.0 * lip * expo * cr.r_tilde**2
    l1 = (2.0 * c_margin * math.sqrt(s) / zeta) ** expo * ((1.0 + 2.0 * k) * cr.r) ** (
        1.0 / (kappa - 1.0)
    )
    l1 += 2.0 * k / ((kappa - 1.0) * (1.0 + 2.0 * k)) * cr.r_tilde
    return {"excess_bound": excess, "l1_bound": l1}


def corollary_bounds(
    loss: LossSpec,
    s: int,
    r: float,
    zeta: float,
    p_alpha: float | None = None,
    tau: float | None = None,
) -> dict:
    """Loss-specialized oracle bounds (kappa = 2 for both families).

    Huber:    excess <= 8(1+2K)^2/(p_alpha zeta^2) s r^2 + (2/3) r^2
              l1     <= 8(1+2K)/(p_alpha zeta^2) s r + K/(3(1+2K)) r
    Logistic: excess <= 4(1+2K)^2/(tau(K) zeta^2) s r^2 + (2/3) r^2
              l1     <= 4(1+2K)/(tau(K) zeta^2) s r + K/(3(1+2K)) r
    """
    if not zeta > 0:
        raise DataError("zeta must be positive")
    k = loss.k_bound
    if loss.kind == HUBER:
        if p_alpha is None:
            raise DataError("Huber corollary needs p_alpha = P(|W| <= alpha)")
        if not 0.0 < p_alpha <= 1.0:
            raise DataError("p_alpha must lie in (0, 1]")
        lead = 8.0 / p_alpha
    elif loss.kind == LOGISTIC:
        if tau is None or not tau > 0:
            raise DataError("logistic corollary needs tau = tau(K) > 0")
        lead = 4.0 / tau
    else:
        raise DataError("corollary bounds exist for Huber and logistic losses")
    z2 = zeta * zeta
    excess = lead * (1.0 + 2.0 * k) ** 2 / z2 * s * r * r + (2.0 / 3.0) * r * r
    l1 = lead * (1.0 + 2.0 * k) / z2 * s * r + k / (3.0 * (1.0 + 2.0 * k)) * r
    return {"excess_bound": excess, "l1_bound": l1}


def tau_logistic(k_bound: float, phi_second=None, grid_points: int = 100_001) -> float:
    """tau(K) = half the infimum of the link's second derivative on [-K, K].

    Scans a uniform grid and refines around the grid argmin by golden-section
    search. Defaults to the logit link, Phi''(u) = sigma(u)(1 - sigma(u)).
    """
    if k_bound < 0:
        raise DataError("K must be nonnegative")
    if phi_second is None:
        def phi_second(u):
            s = 1.0 / (1.0 + math.exp(-u))
            return s * (1.0 - s)

    if k_bound == 0:
        v = phi_second(0.0)
        if v < 0:
            raise DataError("Phi'' is negative at 0; the link must be convex")
        return 0.5 * v

    us = np.linspace(-k_bound, k_bound, grid_points)
    vals = np.array([phi_second(float(u)) for u in us])
    if np.any(vals < 0):
        raise DataError("Phi'' takes negative values; the link must be convex")
    i = int(np.argmin(vals))
    lo = us[max(i - 1, 0)]
    hi = us[min(i + 1, grid_points - 1)]
    # golden-section refinement on [lo, hi]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = phi_second(c), phi_second(d)
    for _ in range(200):
        if b - a < 1e-14 * max(1.0, abs(a), abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = phi_second(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = phi_second(d)
    refined = min(float(np.min(vals)), fc, fd)
    if refined < 0:
        raise DataError("Phi'' takes negative values; the link must be convex")
    return 0.5 * refined

"""The estimators: quadratic and Huber Dantzig selectors, Lasso initializer,
brute-force grid oracle, and thresholding.

The Huber gradient-box feasible set is a union of polyhedra, one per clip
pattern (the assignment of each observation to interior / clipped-high /
clipped-low). Each pattern indexes one linear piece of the piecewise-linear
gradient, so the solver runs an exact LP inside the current pattern region and
iterates patterns with cycle detection, always certifying the true nonlinear
gradient constraint at whatever it returns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import lp as lpmod
from .core import BOX_L1, BOX_NONE, BOX_SAMPLE, HUBER, QUADRATIC, BoxPolicy, CoefVector, DataError, Dataset, LossSpec, as_theta
from .losses import huber_psi, risk_gradient

log = logging.getLogger(__name__)

EXACT = "exact"
PATTERN_CONVERGED = "pattern_converged"
BEST_EFFORT = "best_effort"

FEAS_REPORT_TOL = 1e-7  # reported feasibility slack on the true gradient constraint
PROX_TOL = 1e-8
PROX_MAX_ITERS = 50_000

INTERIOR, CLIP_HIGH, CLIP_LOW = 0, 1, -1


class SolverError(RuntimeError):
    """No iterate satisfied the gradient constraint; try a larger radius r."""


class InfeasibleBoxError(RuntimeError):
    """The Dantzig LP is infeasible because the box constraint binds."""

    def __init__(self, box: BoxPolicy):
        self.box = box
        super().__init__(
            f"Dantzig program infeasible with binding box policy {box.kind!r} "
            f"(k_bound={box.k_bound}); relax the box or enlarge r"
        )


@dataclass(frozen=True, eq=False)
class DantzigFit:
    theta: CoefVector
    r_used: float
    grad_inf_norm: float
    l1_norm: float
    pattern_iters: int
    status: str
    box: BoxPolicy


def pattern_of(ds: Dataset, theta, clip: float) -> np.ndarray:
    """Clip pattern of the residuals; a residual exactly at +-clip is interior."""
    res = ds.y - ds.x @ as_theta(theta)
    return np.where(res > clip, CLIP_HIGH, np.where(res < -clip, CLIP_LOW, INTERIOR)).astype(np.int8)


def _box_constraints(ds: Dataset, box: BoxPolicy, n_vars: int):
    """Extra LP rows for the feasible-set policy, on variables [theta, u]."""
    m = ds.m
    rows = []
    if box.kind == BOX_NONE:
        return rows
    if box.kind == BOX_SAMPLE:
        for i in range(ds.n):
            row = np.zeros(n_vars)
            row[:m] = ds.x[i]
            rows.append((row, lpmod.LE, box.k_bound))
            rows.append((-row, lpmod.LE, box.k_bound))
        return rows
    # l1 surrogate: L * sum(u) <= K (u equals |theta| at any optimum)
    row = np.zeros(n_vars)
    row[m:] = ds.l_bound
    rows.append((row, lpmod.LE, box.k_bound))
    return rows


def _l1_lp(ds: Dataset, grad_rows, box: BoxPolicy, extra_rows=()):
    """Assemble min sum(u) s.t. +-theta <= u, gradient box rows, extras."""
    m = ds.m
    n_vars = 2 * m
    cons = []
    for j in range(m):
        row = np.zeros(n_vars)
        row[j] = 1.0
        row[m + j] = -1.0
        cons.append((row, lpmod.LE, 0.0))
        row2 = np.zeros(n_vars)
        row2[j] = -1.0
        row2[m + j] = -1.0
        cons.append((row2, lpmod.LE, 0.0))
    cons.extend(grad_rows)
    cons.extend(_box_constraints(ds, box, n_vars))
    cons.extend(extra_rows)
    objective = np.concatenate([np.zeros(m), np.ones(m)])
    bounds = [(None, None)] * m + [(0.0, None)] * m
    return lpmod.make_lp(objective, cons, bounds)


def _solve(lp, backend: str):
    if backend == "simplex":
        return lpmod.lp_solve(lp)
    if backend == "highs":
        return lpmod.lp_solve_highs(lp)
    return lpmod.solve_auto(lp)


def fit_dantzig_quadratic(
    ds: Dataset, r: float, box: BoxPolicy = BoxPolicy.none(), backend: str = "auto"
) -> DantzigFit:
    """Quadratic-loss Dantzig selector: min |theta|_1 s.t. |X^T(y - X theta)/n|_inf <= r."""
    if not r > 0:
        raise DataError("radius r must be positive")
    m = ds.m
    q = ds.x.T @ ds.x / ds.n
    z = ds.x.T @ ds.y / ds.n
    n_vars = 2 * m
    grad_rows = []
    for j in range(m):
        row = np.zeros(n_vars)
        row[:m] = q[j]
        grad_rows.append((row, lpmod.LE, z[j] + r))
        grad_rows.append((-row, lpmod.LE, r - z[j]))
    sol = _solve(_l1_lp(ds, grad_rows, box), backend)
    if sol.status == lpmod.INFEASIBLE:
        if box.kind != BOX_NONE:
            raise InfeasibleBoxError(box)
        raise SolverError("quadratic Dantzig LP infeasible without a box; this should not happen")
    if sol.status != lpmod.OPTIMAL:
        raise SolverError(f"LP solver returned {sol.status}")
    theta = CoefVector(sol.x[:m])
    report = risk_gradient(ds, theta, LossSpec.quadratic())
    return DantzigFit(
        theta=theta,
        r_used=float(r),
        grad_inf_norm=report.grad_inf_norm,
        l1_norm=theta.norms()["l1"],
        pattern_iters=0,
        status=EXACT,
        box=box,
    )


def fit_lasso_huber(
    ds: Dataset,
    r: float,
    loss: LossSpec,
    max_iters: int = PROX_MAX_ITERS,
    tol: float = PROX_TOL,
) -> CoefVector:
    """l1-penalized fit min R_n(theta) + r |theta|_1 by accelerated proximal gradient.

    Runs to first-order stationarity: |grad_j| <= r + tol off the support and
    |grad_j + r sign(theta_j)| <= tol on it. Hitting the iteration cap logs a
    warning and returns the last iterate (it is only used as an initializer).
    """
    if loss.kind not in (HUBER, QUADRATIC):
        raise DataError("the Lasso helper supports Huber and quadratic losses")
    if not r > 0:
        raise DataError("radius r must be positive")
    n, m = ds.n, ds.m
    q = ds.x.T @ ds.x / n
    lip = float(np.max(np.linalg.eigvalsh(q)))
    if lip <= 0:
        return CoefVector(np.zeros(m))
    step = 1.0 / lip

    clip = loss.clip if loss.kind == HUBER else None

    def grad_at(t):
        res = ds.y - ds.x @ t
        psi = res if clip is None else huber_psi(res, clip)
        return -(ds.x.T @ psi) / n

    def stationary(t, g):
        on = t != 0
        if np.any(np.abs(g[~on]) > r + tol):
            return False
        return not np.any(np.abs(g[on] + r * np.sign(t[on])) > tol)

    theta = np.zeros(m)
    yk = theta
    tk = 1.0
    for _ in range(max_iters):
        g = grad_at(yk)
        z = yk - step * g
        new = np.sign(z) * np.maximum(np.abs(z) - step * r, 0.0)
        g_new = grad_at(new)
        if stationary(new, g_new):
            return CoefVector(new)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        yk = new + ((tk - 1.0) / t_next) * (new - theta)
        theta = new
        tk = t_next
    log.warning("lasso proximal gradient hit the iteration cap (%d) before stationarity", max_iters)
    return CoefVector(theta)


def _pattern_lp_parts(ds: Dataset, pattern: np.ndarray, clip: float, r: float):
    """Gradient-box rows (linearized on the pattern) and pattern-region rows."""
    n, m = ds.n, ds.m
    n_vars = 2 * m
    interior = pattern == INTERIOR
    high = pattern == CLIP_HIGH
    low = pattern == CLIP_LOW
    xi = ds.x[interior]
    q = xi.T @ xi / n
    b = (xi.T @ ds.y[interior] + clip * (ds.x[high].sum(axis=0) - ds.x[low].sum(axis=0))) / n
    grad_rows = []
    for j in range(m):
        row = np.zeros(n_vars)
        row[:m] = q[j]
        grad_rows.append((row, lpmod.LE, b[j] + r))
        grad_rows.append((-row, lpmod.LE, r - b[j]))
    region_rows = []
    for i in range(n):
        row = np.zeros(n_vars)
        row[:m] = ds.x[i]
        if pattern[i] == INTERIOR:
            region_rows.append((row, lpmod.LE, ds.y[i] + clip))
            region_rows.append((-row, lpmod.LE, clip - ds.y[i]))
        elif pattern[i] == CLIP_HIGH:
            region_rows.append((row, lpmod.LE, ds.y[i] - clip))
        else:
            region_rows.append((-row, lpmod.LE, -(ds.y[i] + clip)))
    return grad_rows, region_rows


def fit_dantzig_huber(
    ds: Dataset,
    r: float,
    loss: LossSpec,
    box: BoxPolicy = BoxPolicy.none(),
    max_pattern_iters: int = 200,
    backend: str = "auto",
    init_max_iters: int = 2000,
    init_tol: float = 1e-6,
) -> DantzigFit:
    """Huber-loss Dantzig selector via clip-pattern sequential LP.

    Starting from the Huber-Lasso pattern, solve the LP restricted to the
    pattern region (where the linearized gradient is exact). On convergence
    with no active region boundary the solution is a fixed point; an active
    boundary flips the touching observations to the adjacent state and
    iterates. An infeasible region LP falls back to the unrestricted
    linearization, re-deriving the pattern at its solution. Cycles and the
    iteration cap end with the best iterate that satisfies the true gradient
    constraint.
    """
    if loss.kind != HUBER:
        raise DataError("fit_dantzig_huber requires a Huber loss")
    if not r > 0:
        raise DataError("radius r must be positive")
    clip = loss.clip

    theta0 = fit_lasso_huber(ds, r, loss, max_iters=init_max_iters, tol=init_tol)
    pattern = pattern_of(ds, theta0, clip)

    visited = set()
    best = None  # (l1, theta, grad_inf)
    best_region_opt = np.inf
    iters = 0
    converged_clean = False
    converged = False
    boundary_tol = 1e-7 * max(1.0, float(np.max(np.abs(ds.y))), clip)

    def consider(theta_arr):
        nonlocal best
        rep = risk_gradient(ds, theta_arr, loss)
        if rep.grad_inf_norm <= r + FEAS_REPORT_TOL:
            l1 = float(np.sum(np.abs(theta_arr)))
            if best is None or l1 < best[0] - 1e-12:
                best = (l1, theta_arr.copy(), rep.grad_inf_norm)
        return rep

    while iters < max_pattern_iters:
        iters += 1
        key = pattern.tobytes()
        if key in visited:
            log.debug("pattern cycle detected after %d iterations", iters)
            break
        visited.add(key)
        grad_rows, region_rows = _pattern_lp_parts(ds, pattern, clip, r)
        sol = _solve(_l1_lp(ds, grad_rows, box, region_rows), backend)
        if sol.status == lpmod.OPTIMAL:
            theta_arr = sol.x[: ds.m]
            consider(theta_arr)
            best_region_opt = min(best_region_opt, sol.objective_value)
            res = ds.y - ds.x @ theta_arr
            at_boundary = np.abs(np.abs(res) - clip) <= boundary_tol
            if not np.any(at_boundary):
                converged = True
                converged_clean = sol.objective_value <= best_region_opt + 1e-9
                break
            nxt = pattern_of(ds, theta_arr, clip)
            flip = at_boundary & (pattern == INTERIOR)
            nxt[flip & (res > 0)] = CLIP_HIGH
            nxt[flip & (res < 0)] = CLIP_LOW
            if nxt.tobytes() in visited:
                converged = True  # boundary still active, so not exact
                break
            pattern = nxt
        elif sol.status == lpmod.INFEASIBLE:
            sol2 = _solve(_l1_lp(ds, grad_rows, box, ()), backend)
            if sol2.status == lpmod.INFEASIBLE:
                if box.kind != BOX_NONE:
                    raise InfeasibleBoxError(box)
                log.debug("linearized gradient box empty for this pattern; stopping")
                break
            if sol2.status != lpmod.OPTIMAL:
                raise SolverError(f"LP solver returned {sol2.status}")
            theta_arr = sol2.x[: ds.m]
            consider(theta_arr)
            pattern = pattern_of(ds, theta_arr, clip)
        else:
            raise SolverError(f"LP solver returned {sol.status}")

    if best is None:
        raise SolverError(
            f"no iterate satisfied the gradient constraint |grad|_inf <= {r:.6g}; "
            "try a larger radius r"
        )
    l1, theta_arr, grad_inf = best
    if converged and converged_clean:
        status = EXACT
    elif converged:
        status = PATTERN_CONVERGED
    else:
        status = BEST_EFFORT
    return DantzigFit(
        theta=CoefVector(theta_arr),
        r_used=float(r),
        grad_inf_norm=grad_inf,
        l1_norm=l1,
        pattern_iters=iters,
        status=status,
        box=box,
    )


def brute_force_dantzig(
    ds: Dataset, r: float, loss: LossSpec, grid_lo: float, grid_hi: float, step: float
) -> CoefVector:
    """Grid-scan oracle for the Dantzig program (M <= 3 only).

    Scans the full grid, keeps points feasible for the true gradient constraint
    within step*L, and returns the one of minimal l1 norm.
    """
    m = ds.m
    if m > 3:
        raise DataError("brute-force oracle supports at most 3 columns")
    if loss.kind not in (QUADRATIC, HUBER):
        raise DataError("brute-force oracle supports Huber and quadratic losses")
    axis = np.arange(grid_lo, grid_hi + 0.5 * step, step)
    if axis.size ** m > 10**7:
        raise DataError("grid too large for the brute-force oracle")
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)  # (P, m)
    tol = r + step * ds.l_bound
    best_l1 = np.inf
    best_pt = None
    chunk = max(1, 10**7 // max(ds.n, 1))
    for start in range(0, pts.shape[0], chunk):
        block = pts[start : start + chunk]
        res = ds.y[:, None] - ds.x @ block.T
        psi = res if loss.kind == QUADRATIC else huber_psi(res, loss.clip)
        grad = -(ds.x.T @ psi) / ds.n
        l1 = np.sum(np.abs(block), axis=1)
        l1[np.max(np.abs(grad), axis=0) > tol] = np.inf
        i = int(np.argmin(l1))
        if l1[i] < best_l1:
            best_l1 = float(l1[i])
            best_pt = block[i]
    if best_pt is None or not np.isfinite(best_l1):
        raise SolverError("no feasible grid point; enlarge the grid or the radius")
    return CoefVector(best_pt)


def threshold_estimator(theta_hat, tau: float) -> CoefVector:
    """Zero out entries with |theta_j| <= tau, keep the rest unchanged."""
    if not tau > 0:
        raise DataError("threshold tau must be positive")
    t = as_theta(theta_hat).copy()
    t[np.abs(t) <= tau] = 0.0
    return CoefVector(t)

"""Dense linear programming: two-phase simplex with Bland's rule plus oracles.

lp_solve is the hand-rolled tableau simplex used for desk-scale problems and
audited against lp_oracle_enumerate (exhaustive basic-point enumeration).
solve_auto transparently delegates instances above a size threshold to
scipy.optimize.linprog (HiGHS) behind the same LpSolution interface.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, GE, EQ = "<=", ">=", "="
_RELATIONS = (LE, GE, EQ)


class LpError(ValueError):
    """Malformed linear program."""


class LpFailure(RuntimeError):
    """The solver could not certify an answer (iteration cap, numerical breakdown)."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """minimize objective . x subject to rows, relations, rhs and variable bounds."""

    objective: np.ndarray
    rows: np.ndarray
    relations: tuple
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        rows = np.asarray(self.rows, dtype=float)
        if rows.size == 0:
            rows = rows.reshape(0, c.size)
        if rows.ndim != 2 or rows.shape[1] != c.size:
            raise LpError("constraint rows must have the same length as the objective")
        rhs = np.asarray(self.rhs, dtype=float).ravel()
        if rhs.size != rows.shape[0] or len(self.relations) != rows.shape[0]:
            raise LpError("rows, relations and rhs must have matching lengths")
        for rel in self.relations:
            if rel not in _RELATIONS:
                raise LpError(f"unknown relation {rel!r}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
            raise LpError("objective, rows and rhs must be finite")
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.size != c.size or upper.size != c.size:
            raise LpError("bounds must match the number of variables")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower > upper):
            raise LpError("invalid variable bounds")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


def make_lp(objective, constraints, bounds=None) -> LinearProgram:
    """Convenience constructor; constraints is a list of (row, relation, rhs),
    bounds a list of (lower, upper) with None for unbounded sides."""
    c = np.asarray(objective, dtype=float).ravel()
    d = c.size
    row_list = [np.asarray(r, dtype=float).ravel() for r, _, _ in constraints]
    for r in row_list:
        if r.size != d:
            raise LpError("constraint rows must have the same length as the objective")
    rows = np.array(row_list) if row_list else np.zeros((0, d))
    rels = tuple(rel for _, rel, _ in constraints)
    rhs = np.array([float(b) for _, _, b in constraints], dtype=float)
    lower = np.full(d, -np.inf)
    upper = np.full(d, np.inf)
    if bounds is not None:
        for j, (lo, hi) in enumerate(bounds):
            lower[j] = -np.inf if lo is None else float(lo)
            upper[j] = np.inf if hi is None else float(hi)
    return LinearProgram(c, rows, rels, rhs, lower, upper)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None
    objective_value: float
    max_constraint_violation: float


def max_violation(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of any row or bound at x (0 when fully feasible)."""
    v = 0.0
    if lp.n_rows:
        ax = lp.rows @ x
        for i, rel in enumerate(lp.relations):
            if rel == LE:
                v = max(v, ax[i] - lp.rhs[i])
            elif rel == GE:
                v = max(v, lp.rhs[i] - ax[i])
            else:
                v = max(v, abs(ax[i] - lp.rhs[i]))
    with np.errstate(invalid="ignore"):
        lo = lp.lower - x
        hi = x - lp.upper
    lo = lo[np.isfinite(lp.lower)]
    hi = hi[np.isfinite(lp.upper)]
    if lo.size:
        v = max(v, float(np.max(lo)))
    if hi.size:
        v = max(v, float(np.max(hi)))
    return float(max(v, 0.0))


def _to_standard_form(lp: LinearProgram):
    """Rewrite with nonnegative variables only.

    Returns (c_std, A_std, rel_std, b_std, recover) where recover maps a
    standard-form solution back to original coordinates.
    """
    d = lp.n_vars
    col_plus = np.zeros(d, dtype=int)
    col_minus = np.full(d, -1, dtype=int)
    shift = np.zeros(d)
    negate = np.zeros(d, dtype=bool)
    extra_rows = []

    n_std = 0
    for j in range(d):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isneginf(lo) and np.isposinf(hi):
            col_plus[j] = n_std
            col_minus[j] = n_std + 1
            n_std += 2
        elif np.isneginf(lo):
            # x = hi - t, t >= 0
            col_plus[j] = n_std
            negate[j] = True
            shift[j] = hi
            n_std += 1
        else:
            # x = lo + t, t >= 0; finite upper becomes a row t <= hi - lo
            col_plus[j] = n_std
            shift[j] = lo
            if np.isfinite(hi):
                extra_rows.append((j, hi - lo))
            n_std += 1

    m = lp.n_rows + len(extra_rows)
    a = np.zeros((m, n_std))
    b = np.zeros(m)
    rels = []
    for i in range(lp.n_rows):
        row = lp.rows[i]
        rhs = lp.rhs[i] - float(row @ shift)
        for j in range(d):
            cj = row[j]
            if cj == 0.0:
                continue
            sgn = -cj if negate[j] else cj
            a[i, col_plus[j]] += sgn
            if col_minus[j] >= 0:
                a[i, col_minus[j]] -= cj
        b[i] = rhs
        rels.append(lp.relations[i])
    for k, (j, cap) in enumerate(extra_rows):
        a[lp.n_rows + k, col_plus[j]] = 1.0
        b[lp.n_rows + k] = cap
        rels.append(LE)

    c = np.zeros(n_std)
    for j in range(d):
        cj = lp.objective[j]
        if cj == 0.0:
            continue
        c[col_plus[j]] += -cj if negate[j] else cj
        if col_minus[j] >= 0:
            c[col_minus[j]] -= cj

    def recover(t: np.ndarray) -> np.ndarray:
        x = np.empty(d)
        for j in range(d):
            val = t[col_plus[j]]
            if col_minus[j] >= 0:
                val -= t[col_minus[j]]
            elif negate[j]:
                val = -val
            x[j] = shift[j] + val
        return x

    return c, a, rels, b, recover


def _bland_simplex(tableau, basis, n_cols, pivot_tol, max_iters):
    """In-place primal simplex on [A | b] with cost row last; Bland's rule.

    Entering: lowest-index column with reduced cost < -pivot_tol. Leaving:
    minimum ratio, ties broken by the lowest basic-variable index. Returns
    'optimal' or 'unbounded'; raises LpFailure past the iteration cap.
    """
    m = tableau.shape[0] - 1
    for _ in range(max_iters):
        cost = tableau[-1, :n_cols]
        candidates = np.flatnonzero(cost < -pivot_tol)
        if candidates.size == 0:
            return OPTIMAL
        col = int(candidates[0])
        a = tableau[:m, col]
        rhs = tableau[:m, -1]
        pos = a > pivot_tol
        if not np.any(pos):
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[pos] = rhs[pos] / a[pos]
        best = np.min(ratios)
        tied = np.flatnonzero(ratios <= best + 1e-12)
        row = int(min(tied, key=lambda i: basis[i]))
        piv = tableau[row, col]
        tableau[row, :] /= piv
        colvals = tableau[:, col].copy()
        colvals[row] = 0.0
        tableau -= np.outer(colvals, tableau[row, :])
        tableau[:, col] = 0.0
        tableau[row, col] = 1.0
        basis[row] = col
    raise LpFailure(f"simplex iteration cap ({max_iters}) exceeded")


def lp_solve(
    lp: LinearProgram,
    feas_tol: float = 1e-9,
    pivot_tol: float = 1e-10,
    max_iters: int | None = None,
) -> LpSolution:
    """Two-phase dense simplex with Bland's anti-cycling rule."""
    c, a, rels, b, recover = _to_standard_form(lp)
    m, n = a.shape
    if max_iters is None:
        max_iters = 50 * (m + n + 2)

    if m == 0:
        # only nonnegativity: minimize c.t with t >= 0
        if np.any(c < -pivot_tol):
            return LpSolution(UNBOUNDED, None, -np.inf, np.inf)
        x = recover(np.zeros(n))
        return LpSolution(OPTIMAL, x, float(lp.objective @ x), max_violation(lp, x))

    # normalize rhs signs
    a = a.copy()
    b = b.copy()
    rels = list(rels)
    for i in range(m):
        if b[i] < 0:
            a[i] *= -1.0
            b[i] *= -1.0
            if rels[i] == LE:
                rels[i] = GE
            elif rels[i] == GE:
                rels[i] = LE

    # columns: [structural | slack/surplus | artificial]
    slack_cols = []
    art_cols = []
    col = n
    row_slack = [-1] * m
    row_art = [-1] * m
    for i in range(m):
        if rels[i] == LE:
            row_slack[i] = col
            slack_cols.append((i, 1.0))
            col += 1
        elif rels[i] == GE:
            row_slack[i] = col
            slack_cols.append((i, -1.0))
            col += 1
    for i in range(m):
        if rels[i] != LE:
            row_art[i] = col
            art_cols.append(i)
            col += 1
    total = col
    art_start = total - len(art_cols)

    tab = np.zeros((m + 1, total + 1))
    tab[:m, :n] = a
    tab[:m, -1] = b
    for (i, sgn), j in zip(slack_cols, [row_slack[i] for i, _ in slack_cols]):
        tab[i, j] = sgn
    basis = [0] * m
    for i in range(m):
        if rels[i] == LE:
            basis[i] = row_slack[i]
        else:
            tab[i, row_art[i]] = 1.0
            basis[i] = row_art[i]

    # phase 1: minimize sum of artificials
    if art_cols:
        tab[-1, art_start:total] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                tab[-1, :] -= tab[i, :]
        status = _bland_simplex(tab, basis, total, pivot_tol, max_iters)
        if status != OPTIMAL:
            raise LpFailure("phase 1 reported unbounded; the auxiliary LP is bounded by construction")
        phase1_obj = -tab[-1, -1]
        if phase1_obj > feas_tol * max(1.0, float(np.max(np.abs(b)))):
            return LpSolution(INFEASIBLE, None, np.nan, np.inf)
        # drive leftover artificials out of the basis
        for i in range(m):
            if basis[i] >= art_start:
                pivot_col = -1
                for j in range(art_start):
                    if abs(tab[i, j]) > pivot_tol:
                        pivot_col = j
                        break
                if pivot_col < 0:
                    continue  # redundant row
                piv = tab[i, pivot_col]
                tab[i, :] /= piv
                colvals = tab[:, pivot_col].copy()
                colvals[i] = 0.0
                tab -= np.outer(colvals, tab[i, :])
                tab[:, pivot_col] = 0.0
                tab[i, pivot_col] = 1.0
                basis[i] = pivot_col

    # phase 2 on the real objective, artificial columns frozen out
    tab[:, art_start:total] = 0.0
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    for i in range(m):
        if basis[i] < n and abs(c[basis[i]]) > 0:
            tab[-1, :] -= c[basis[i]] * tab[i, :]
    status = _bland_simplex(tab, basis, art_start, pivot_tol, max_iters)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, -np.inf, np.inf)

    t = np.zeros(total)
    for i in range(m):
        if basis[i] < total:
            t[basis[i]] = tab[i, -1]
    x = recover(t[:n])
    return LpSolution(OPTIMAL, x, float(lp.objective @ x), max_violation(lp, x))


def lp_solve_highs(lp: LinearProgram) -> LpSolution:
    """Same contract as lp_solve, backed by scipy.optimize.linprog (HiGHS)."""
    from scipy.optimize import linprog

    le_rows, le_rhs, eq_rows, eq_rhs = [], [], [], []
    for i, rel in enumerate(lp.relations):
        if rel == LE:
            le_rows.append(lp.rows[i])
            le_rhs.append(lp.rhs[i])
        elif rel == GE:
            le_rows.append(-lp.rows[i])
            le_rhs.append(-lp.rhs[i])
        else:
            eq_rows.append(lp.rows[i])
            eq_rhs.append(lp.rhs[i])
    kwargs = {}
    if le_rows:
        kwargs["A_ub"] = np.array(le_rows)
        kwargs["b_ub"] = np.array(le_rhs)
    if eq_rows:
        kwargs["A_eq"] = np.array(eq_rows)
        kwargs["b_eq"] = np.array(eq_rhs)
    bounds = [
        (None if np.isneginf(lo) else lo, None if np.isposinf(hi) else hi)
        for lo, hi in zip(lp.lower, lp.upper)
    ]
    res = linprog(lp.objective, bounds=bounds, method="highs", **kwargs)
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return LpSolution(OPTIMAL, x, float(lp.objective @ x), max_violation(lp, x))
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, np.nan, np.inf)
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, -np.inf, np.inf)
    raise LpFailure(f"HiGHS failed: {res.message}")


# above this size the tableau simplex becomes the bottleneck in simulations
_AUTO_ROW_LIMIT = 400
_AUTO_CELL_LIMIT = 60_000


def solve_auto(lp: LinearProgram, feas_tol: float = 1e-9, pivot_tol: float = 1e-10) -> LpSolution:
    """Deterministic size-based dispatch between lp_solve and the HiGHS backend."""
    cells = (lp.n_rows + 1) * (lp.n_vars + lp.n_rows + 1)
    if lp.n_rows > _AUTO_ROW_LIMIT or cells > _AUTO_CELL_LIMIT:
        return lp_solve_highs(lp)
    return lp_solve(lp, feas_tol=feas_tol, pivot_tol=pivot_tol)


def lp_oracle_enumerate(lp: LinearProgram, feas_tol: float = 1e-8) -> LpSolution:
    """Exact optimum by enumerating all basic points (test oracle).

    Requires <= 12 variables, <= 24 constraints, and finite bounds on every
    variable so the feasible region is a polytope: then it is nonempty iff it
    has a vertex, and enumeration of all d-subsets of active hyperplanes
    (equalities forced active) finds the optimum.
    """
    d = lp.n_vars
    if d > 12:
        raise LpError("oracle cap exceeded: more than 12 variables")
    if lp.n_rows > 24:
        raise LpError("oracle cap exceeded: more than 24 constraints")
    if not (np.all(np.isfinite(lp.lower)) and np.all(np.isfinite(lp.upper))):
        raise LpError("oracle requires finite bounds on every variable")

    planes = []  # (normal, offset, mandatory)
    for i, rel in enumerate(lp.relations):
        planes.append((lp.rows[i], lp.rhs[i], rel == EQ))
    eye = np.eye(d)
    for j in range(d):
        planes.append((eye[j], lp.lower[j], False))
        if lp.upper[j] > lp.lower[j]:
            planes.append((eye[j], lp.upper[j], False))

    mandatory = [k for k, p in enumerate(planes) if p[2]]
    optional = [k for k, p in enumerate(planes) if not p[2]]
    need = d - len(mandatory)
    if need < 0:
        need = 0

    best_val = np.inf
    best_x = None
    found_feasible = False
    for combo in itertools.combinations(optional, need):
        idx = mandatory + list(combo)
        if len(idx) != d:
            continue
        a = np.array([planes[k][0] for k in idx])
        b = np.array([planes[k][1] for k in idx])
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        if max_violation(lp, x) > feas_tol * max(1.0, float(np.max(np.abs(x)))):
            continue
        found_feasible = True
        val = float(lp.objective @ x)
        if val < best_val - 1e-12:
            best_val = val
            best_x = x
    if not found_feasible:
        return LpSolution(INFEASIBLE, None, np.nan, np.inf)
    return LpSolution(OPTIMAL, best_x, best_val, max_violation(lp, best_x))

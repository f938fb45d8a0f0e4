import numpy as np

from dantzigsel import lp as lpmod
from dantzigsel.core import Dataset


def orthonormal_dataset(n, m, z, seed=0, noise=0.0):
    """Design with X^T X / n = I and X^T y / n = z (plus optional noise)."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, m))
    q, _ = np.linalg.qr(a)
    x = q * np.sqrt(n)
    y = x @ np.asarray(z, dtype=float)
    if noise:
        y = y + noise * rng.standard_normal(n)
    return Dataset(x=x, y=y, l_bound=float(np.max(np.abs(x))), normalized=True)


def rademacher_dataset(n, m, theta_star, seed=0, noise=0.0):
    """+-1 design (exactly unit empirical column norms)."""
    rng = np.random.default_rng(seed)
    x = (rng.integers(0, 2, size=(n, m)) * 2 - 1).astype(float)
    y = x @ np.asarray(theta_star, dtype=float)
    if noise:
        y = y + noise * rng.standard_normal(n)
    return Dataset(x=x, y=y, l_bound=1.0, normalized=True)


def hadamard_dataset(n, z, noise=0.0, seed=0):
    """Two orthogonal +-1 columns (so L = 1 exactly) with X^T y / n = z."""
    assert n % 4 == 0
    block = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    x = np.tile(block, (n // 4, 1))
    y = x @ np.asarray(z, dtype=float)
    if noise:
        y = y + noise * np.random.default_rng(seed).standard_normal(n)
    return Dataset(x=x, y=y, l_bound=1.0, normalized=True)


def make_random_lp(rng):
    """Random LP within the enumeration-oracle caps: every variable boxed, so
    the feasible region is a polytope and the status is optimal/infeasible."""
    d = int(rng.integers(1, 5))
    m = int(rng.integers(0, 9))
    cons = []
    for _ in range(m):
        row = rng.integers(-3, 4, size=d).astype(float)
        if not np.any(row):
            row[rng.integers(0, d)] = 1.0
        rel = rng.choice([lpmod.LE, lpmod.GE, lpmod.EQ], p=[0.45, 0.45, 0.10])
        rhs = float(rng.integers(-4, 5))
        cons.append((row, rel, rhs))
    b = float(rng.uniform(0.5, 3.0))
    bounds = [(-b, b)] * d
    c = rng.integers(-3, 4, size=d).astype(float)
    return lpmod.make_lp(c, cons, bounds)

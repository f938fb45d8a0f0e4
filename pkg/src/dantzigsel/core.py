"""Shared domain types: datasets, loss specs, coefficient vectors, box policies."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Malformed dataset, loss specification, or parameter."""


def as_theta(theta) -> np.ndarray:
    """Accept a CoefVector or anything array-like, return a 1-d float array."""
    if isinstance(theta, CoefVector):
        return theta.theta
    arr = np.asarray(theta, dtype=float).ravel()
    return arr


def sign_vector(theta) -> np.ndarray:
    """Entrywise sign in {-1, 0, +1}; zero is detected exactly, no tolerance."""
    return np.sign(as_theta(theta)).astype(int)


def norms(theta) -> dict:
    """l1 / l2 / sup norms and the support size of a coefficient vector."""
    t = as_theta(theta)
    return {
        "l1": float(np.sum(np.abs(t))),
        "l2": float(np.sqrt(np.sum(t * t))),
        "linf": float(np.max(np.abs(t))) if t.size else 0.0,
        "sparsity": int(np.count_nonzero(t)),
    }


@dataclass(frozen=True, eq=False)
class CoefVector:
    """Dense parameter vector with support / sign helpers."""

    theta: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.theta, dtype=float).ravel()
        if arr.size == 0:
            raise DataError("coefficient vector must be nonempty")
        if not np.all(np.isfinite(arr)):
            raise DataError("coefficient vector contains non-finite entries")
        object.__setattr__(self, "theta", arr)

    def __len__(self):
        return self.theta.size

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.theta)

    def sparsity(self) -> int:
        return int(np.count_nonzero(self.theta))

    def sign_vector(self) -> np.ndarray:
        return sign_vector(self.theta)

    def norms(self) -> dict:
        return norms(self.theta)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix (n x M, the dictionary evaluated at the sample) plus response.

    l_bound is the sup bound on dictionary values; every |x[i, j]| must respect it.
    `normalized` records whether columns were rescaled to unit empirical norm,
    with `column_scales` holding the original norms so estimates can be mapped
    back to the raw coordinates.
    """

    x: np.ndarray
    y: np.ndarray
    l_bound: float
    normalized: bool = False
    column_scales: np.ndarray | None = field(default=None)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2:
            raise DataError("design matrix must be 2-dimensional")
        n, m = x.shape
        if n < 1:
            raise DataError("need at least one observation")
        if m < 2:
            raise DataError("need at least two dictionary columns (M >= 2)")
        if y.shape[0] != n:
            raise DataError(f"response length {y.shape[0]} != number of rows {n}")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DataError("design or response contains non-finite values")
        if not (self.l_bound > 0):
            raise DataError("l_bound must be positive")
        if np.max(np.abs(x)) > self.l_bound:
            raise DataError("design entries exceed the declared sup bound l_bound")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    def column_norms(self) -> np.ndarray:
        """Empirical norms ||f_j||_n = sqrt(mean of x[:, j]^2)."""
        return np.sqrt(np.mean(self.x * self.x, axis=0))

    def normalize(self) -> "Dataset":
        """Rescale columns to unit empirical norm, recording the scale factors."""
        scales = self.column_norms()
        if np.any(scales <= 0):
            raise DataError("cannot normalize: some column is identically zero")
        xn = self.x / scales
        return Dataset(
            x=xn,
            y=self.y,
            l_bound=float(np.max(np.abs(xn))),
            normalized=True,
            column_scales=scales,
        )

    def sample_sup(self, theta) -> float:
        """max_i |x_i . theta|, the sample surrogate for ||f_theta||_inf."""
        t = as_theta(theta)
        return float(np.max(np.abs(self.x @ t)))


QUADRATIC = "quadratic"
HUBER = "huber"
LOGISTIC = "logistic"


@dataclass(frozen=True)
class LossSpec:
    """Tagged loss family with its derived constants.

    Huber uses clip level 2*k_bound + alpha; the Lipschitz bound of the scalar
    derivative is 2K+alpha for Huber and 1 for logistic. The quadratic loss has
    no such bound and lipschitz() refuses it.
    """

    kind: str
    k_bound: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in (QUADRATIC, HUBER, LOGISTIC):
            raise DataError(f"unknown loss kind {self.kind!r}")
        if self.kind == HUBER:
            if self.k_bound is None or self.alpha is None:
                raise DataError("Huber loss requires k_bound and alpha")
            if not (self.k_bound > 0 and self.alpha > 0):
                raise DataError("Huber k_bound and alpha must be positive")
        if self.kind == LOGISTIC:
            if self.k_bound is None or not (self.k_bound > 0):
                raise DataError("logistic loss requires a positive k_bound")

    @classmethod
    def quadratic(cls) -> "LossSpec":
        return cls(QUADRATIC)

    @classmethod
    def huber(cls, k_bound: float, alpha: float) -> "LossSpec":
        return cls(HUBER, k_bound=k_bound, alpha=alpha)

    @classmethod
    def logistic(cls, k_bound: float) -> "LossSpec":
        return cls(LOGISTIC, k_bound=k_bound)

    @property
    def clip(self) -> float:
        if self.kind != HUBER:
            raise DataError("clip level is defined for the Huber loss only")
        return 2.0 * self.k_bound + self.alpha

    def lipschitz(self) -> float:
        if self.kind == HUBER:
            return self.clip
        if self.kind == LOGISTIC:
            return 1.0
        raise DataError(
            "the quadratic loss has no Lipschitz bound; supply the tuning radius r explicitly"
        )


BOX_NONE = "none"
BOX_SAMPLE = "sample"
BOX_L1 = "l1"


@dataclass(frozen=True)
class BoxPolicy:
    """Data-driven surrogate for the population sup-norm ball ||f_theta||_inf <= K.

    'sample' enforces max_i |x_i . theta| <= K (2n linear rows); 'l1' the
    conservative convex surrogate L*|theta|_1 <= K; 'none' drops the constraint.
    """

    kind: str = BOX_NONE
    k_bound: float | None = None

    def __post_init__(self):
        if self.kind not in (BOX_NONE, BOX_SAMPLE, BOX_L1):
            raise DataError(f"unknown box policy {self.kind!r}")
        if self.kind != BOX_NONE and (self.k_bound is None or not self.k_bound > 0):
            raise DataError(f"box policy {self.kind!r} requires a positive k_bound")

    @classmethod
    def none(cls) -> "BoxPolicy":
        return cls(BOX_NONE)

    @classmethod
    def sample_sup(cls, k_bound: float) -> "BoxPolicy":
        return cls(BOX_SAMPLE, k_bound=k_bound)

    @classmethod
    def l1_surrogate(cls, k_bound: float) -> "BoxPolicy":
        return cls(BOX_L1, k_bound=k_bound)

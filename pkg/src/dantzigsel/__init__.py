"""Generalized Dantzig selector for sparse high-dimensional regression with
Lipschitz losses: estimators, theoretical tuning and diagnostics, and a
reproducible Monte Carlo harness."""

from .core import BoxPolicy, CoefVector, DataError, Dataset, LossSpec, norms, sign_vector
from .dantzig import (
    DantzigFit,
    InfeasibleBoxError,
    SolverError,
    brute_force_dantzig,
    fit_dantzig_huber,
    fit_dantzig_quadratic,
    fit_lasso_huber,
    pattern_of,
    threshold_estimator,
)
from .diagnostics import (
    ConstantsReport,
    coherence,
    coherence_check,
    constants_chain,
    corollary_bounds,
    gram,
    margin_constant_huber,
    re_estimate,
    re_lower_bound,
    tau_logistic,
    theorem1_bounds,
    tuning,
)
from .losses import (
    KinkError,
    RiskReport,
    empirical_hessian,
    empirical_risk,
    grad_check,
    huber_psi,
    risk_gradient,
)
from .simulate import (
    ConfigError,
    ExperimentResult,
    RepResult,
    SimConfig,
    excess_risk_mc,
    generate,
    run_experiment,
    sweep,
)

__version__ = "0.1.0"

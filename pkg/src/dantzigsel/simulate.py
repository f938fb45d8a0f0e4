"""Data generation under the linear model and the Monte Carlo experiment harness.

Replications use independent RNG streams keyed by (seed, rep), so results are
reproducible and independent of scheduling. Long-format CSV output has one row
per replication plus one summary row per cell.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import BoxPolicy, CoefVector, DataError, Dataset, LossSpec, sign_vector
from .dantzig import fit_dantzig_huber, fit_dantzig_quadratic, threshold_estimator
from .diagnostics import constants_chain
from .losses import empirical_risk, huber_phi, risk_gradient

log = logging.getLogger(__name__)

DESIGNS = ("orthonormal", "gaussian", "equicorrelated", "rademacher")
NOISES = ("gaussian", "laplace", "cauchy", "student_t")
R_POLICIES = ("theoretical", "scaled", "fixed")
THRESHOLD_POLICIES = ("practical", "theoretical")

CSV_COLUMNS = (
    "cell_id",
    "rep",
    "n",
    "M",
    "s",
    "noise",
    "loss",
    "r",
    "sup_err",
    "l1_err",
    "excess_risk",
    "sign_exact",
    "feasible",
    "status",
)


class ConfigError(ValueError):
    """Invalid simulation configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


@dataclass(frozen=True)
class SimConfig:
    n: int
    M: int
    s: int
    design: str = "gaussian"
    design_rho0: float = 0.0
    magnitude: float = 1.0
    signs: str = "random"  # random | fixed
    noise: str = "gaussian"
    noise_scale: float = 1.0
    noise_df: float = 3.0
    loss_kind: str = "huber"  # huber | quadratic
    k_bound: float = 1.0
    alpha: float = 0.5
    r_policy: str = "scaled"
    r_value: float = 1.0  # multiplier for 'scaled', radius for 'fixed'
    reps: int = 1
    seed: int = 0
    eval_sample: int = 100_000
    threshold_policy: str = "practical"
    threshold_mult: float = 1.0
    beta: float = 2.0  # used by the theoretical threshold constants
    box: str = "none"
    box_k: float | None = None

    def validate(self):
        if self.n < 1:
            raise ConfigError("n", "must be >= 1")
        if self.M < 2:
            raise ConfigError("M", "must be >= 2")
        if not 1 <= self.s <= self.M:
            raise ConfigError("s", "must satisfy 1 <= s <= M")
        if self.design not in DESIGNS:
            raise ConfigError("design", f"must be one of {DESIGNS}")
        if self.design == "orthonormal" and self.n < self.M:
            raise ConfigError("design", "orthonormal design needs n >= M")
        if self.design == "equicorrelated":
            lo = -1.0 / (self.M - 1)
            if not lo < self.design_rho0 < 1.0:
                raise ConfigError("design_rho0", f"must lie in ({lo:.6g}, 1)")
        if self.signs not in ("random", "fixed"):
            raise ConfigError("signs", "must be 'random' or 'fixed'")
        if self.noise not in NOISES:
            raise ConfigError("noise", f"must be one of {NOISES}")
        if not self.noise_scale >= 0:
            raise ConfigError("noise_scale", "must be >= 0")
        if self.noise == "student_t" and not self.noise_df > 0:
            raise ConfigError("noise_df", "must be > 0")
        if self.loss_kind not in ("huber", "quadratic"):
            raise ConfigError("loss_kind", "must be 'huber' or 'quadratic'")
        if self.loss_kind == "huber" and not (self.k_bound > 0 and self.alpha > 0):
            raise ConfigError("k_bound", "huber loss needs positive k_bound and alpha")
        if self.r_policy not in R_POLICIES:
            raise ConfigError("r_policy", f"must be one of {R_POLICIES}")
        if self.r_policy == "theoretical" and self.loss_kind == "quadratic":
            raise ConfigError("r_policy", "theoretical tuning rejects the quadratic loss")
        if self.r_policy in ("scaled", "fixed") and not self.r_value > 0:
            raise ConfigError("r_value", "must be > 0")
        if self.reps < 1:
            raise ConfigError("reps", "must be >= 1")
        if self.eval_sample < 2:
            raise ConfigError("eval_sample", "must be >= 2")
        if self.threshold_policy not in THRESHOLD_POLICIES:
            raise ConfigError("threshold_policy", f"must be one of {THRESHOLD_POLICIES}")
        if self.threshold_policy == "practical" and not self.threshold_mult > 0:
            raise ConfigError("threshold_mult", "must be > 0")
        if not self.beta > 1:
            raise ConfigError("beta", "must be > 1")
        if self.box not in ("none", "sample", "l1"):
            raise ConfigError("box", "must be 'none', 'sample' or 'l1'")
        if self.box != "none" and not (self.box_k or 0) > 0:
            raise ConfigError("box_k", "must be > 0 when a box policy is active")
        return self

    def loss(self) -> LossSpec:
        if self.loss_kind == "huber":
            return LossSpec.huber(self.k_bound, self.alpha)
        return LossSpec.quadratic()

    def box_policy(self) -> BoxPolicy:
        if self.box == "sample":
            return BoxPolicy.sample_sup(self.box_k)
        if self.box == "l1":
            return BoxPolicy.l1_surrogate(self.box_k)
        return BoxPolicy.none()


@dataclass(frozen=True)
class RepResult:
    rep: int
    r_used: float
    sup_err: float
    l1_err: float
    excess_risk: float
    excess_se: float
    sign_exact: bool
    support_match: bool
    theta_star_feasible: bool
    grad_inf_norm: float
    l1_theta_hat: float
    l1_theta_star: float
    l1_delta_on_support: float
    l1_delta_off_support: float
    pattern_iters: int
    status: str


def _rng(cfg: SimConfig, rep: int, stage: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, rep, stage]))


def _draw_design(rng: np.random.Generator, n: int, cfg: SimConfig) -> np.ndarray:
    if cfg.design == "orthonormal":
        a = rng.standard_normal((n, cfg.M))
        q, _ = np.linalg.qr(a)
        return q * math.sqrt(n)
    if cfg.design == "gaussian":
        return rng.standard_normal((n, cfg.M))
    if cfg.design == "equicorrelated":
        sigma = (1.0 - cfg.design_rho0) * np.eye(cfg.M) + cfg.design_rho0 * np.ones((cfg.M, cfg.M))
        chol = np.linalg.cholesky(sigma)
        return rng.standard_normal((n, cfg.M)) @ chol.T
    # rademacher: exactly unit empirical column norms
    return (rng.integers(0, 2, size=(n, cfg.M)) * 2 - 1).astype(float)


def population_covariance(cfg: SimConfig) -> np.ndarray:
    """Second-moment matrix of the design family (all have unit diagonal)."""
    if cfg.design == "equicorrelated":
        return (1.0 - cfg.design_rho0) * np.eye(cfg.M) + cfg.design_rho0 * np.ones(
            (cfg.M, cfg.M)
        )
    return np.eye(cfg.M)


def population_pred_norm_sq(delta, cfg: SimConfig) -> float:
    """Closed-form ||f_delta||^2 under the design family's population law."""
    d = np.asarray(delta, dtype=float).ravel()
    if cfg.design == "equicorrelated":
        rho = cfg.design_rho0
        return float((1.0 - rho) * np.sum(d * d) + rho * np.sum(d) ** 2)
    return float(np.sum(d * d))


def _draw_noise(rng: np.random.Generator, n: int, cfg: SimConfig) -> np.ndarray:
    sc = cfg.noise_scale
    if cfg.noise == "gaussian":
        return sc * rng.standard_normal(n)
    if cfg.noise == "laplace":
        return rng.laplace(0.0, sc, size=n) if sc > 0 else np.zeros(n)
    if cfg.noise == "cauchy":
        return sc * rng.standard_cauchy(n)
    return sc * rng.standard_t(cfg.noise_df, size=n)


def noise_abs_cdf(cfg: SimConfig, t: float) -> float:
    """P(|W| <= t) in closed form for the configured noise law."""
    if t < 0:
        return 0.0
    sc = cfg.noise_scale
    if sc == 0:
        return 1.0
    if cfg.noise == "gaussian":
        return math.erf(t / (sc * math.sqrt(2.0)))
    if cfg.noise == "laplace":
        return 1.0 - math.exp(-t / sc)
    if cfg.noise == "cauchy":
        return 2.0 / math.pi * math.atan(t / sc)
    from scipy.stats import t as student_t

    return float(2.0 * student_t.cdf(t / sc, df=cfg.noise_df) - 1.0)


def generate(cfg: SimConfig, rep: int):
    """One replication's dataset and target vector.

    The raw design is drawn from the configured family, columns are rescaled
    to unit empirical norm, and the target is laid down in those normalized
    coordinates so its magnitudes are exactly as configured; y = X theta* + W.
    """
    cfg.validate()
    rng = _rng(cfg, rep, 0)
    x = _draw_design(rng, cfg.n, cfg)
    scales = np.sqrt(np.mean(x * x, axis=0))
    if np.any(scales <= 0):
        raise DataError("degenerate design draw: a column is identically zero")
    xn = x / scales

    theta = np.zeros(cfg.M)
    positions = rng.choice(cfg.M, size=cfg.s, replace=False)
    if cfg.signs == "random":
        signs = rng.choice(np.array([-1.0, 1.0]), size=cfg.s)
    else:
        signs = np.ones(cfg.s)
    theta[positions] = signs * cfg.magnitude

    w = _draw_noise(rng, cfg.n, cfg)
    y = xn @ theta + w
    ds = Dataset(
        x=xn,
        y=y,
        l_bound=float(np.max(np.abs(xn))),
        normalized=True,
        column_scales=scales,
    )
    return ds, CoefVector(theta)


def resolve_r(cfg: SimConfig, ds: Dataset) -> float:
    if cfg.r_policy == "fixed":
        return float(cfg.r_value)
    if cfg.r_policy == "scaled":
        return float(cfg.r_value * math.sqrt(math.log(cfg.M) / cfg.n))
    from .diagnostics import tuning

    return float(tuning(cfg.loss(), ds.l_bound, cfg.M, cfg.n)["r"])


def resolve_threshold(cfg: SimConfig, ds: Dataset, r: float) -> float:
    if cfg.threshold_policy == "practical":
        return float(cfg.threshold_mult * r)
    cr = constants_chain(
        k_bound=cfg.k_bound,
        alpha=cfg.alpha,
        l_bound=ds.l_bound,
        m=cfg.M,
        n=cfg.n,
        s=cfg.s,
        beta=cfg.beta,
        p_alpha=noise_abs_cdf(cfg, cfg.alpha),
        p_clip=noise_abs_cdf(cfg, 2.0 * cfg.k_bound + cfg.alpha),
        r=r,
    )
    return float(cr.c4 * r)


def excess_risk_mc(theta, theta_star, cfg: SimConfig, rep: int):
    """Fresh-sample Monte Carlo estimate of the population excess risk.

    Draws eval_sample observations from the population design law (no
    empirical renormalization) and the noise law, and averages the loss gap
    against the target. Returns (estimate, standard_error).
    """
    cfg.validate()
    loss = cfg.loss()
    if loss.kind not in ("huber", "quadratic"):
        raise DataError("excess risk estimation supports Huber and quadratic losses")
    rng = _rng(cfg, rep, 1)
    t = np.asarray(theta, dtype=float).ravel() if not isinstance(theta, CoefVector) else theta.theta
    ts = (
        np.asarray(theta_star, dtype=float).ravel()
        if not isinstance(theta_star, CoefVector)
        else theta_star.theta
    )
    x = _draw_design(rng, cfg.eval_sample, cfg)
    w = _draw_noise(rng, cfg.eval_sample, cfg)
    y = x @ ts + w
    res = y - x @ t
    res_star = w  # y - x @ ts exactly
    if loss.kind == "huber":
        diff = huber_phi(res, loss.clip) - huber_phi(res_star, loss.clip)
    else:
        diff = 0.5 * res * res - 0.5 * res_star * res_star
    est = float(np.mean(diff))
    se = float(np.std(diff, ddof=1) / math.sqrt(diff.size))
    return est, se


def run_rep(cfg: SimConfig, rep: int) -> RepResult:
    ds, theta_star = generate(cfg, rep)
    loss = cfg.loss()
    r = resolve_r(cfg, ds)
    feas = risk_gradient(ds, theta_star, loss).grad_inf_norm <= r

    try:
        if cfg.loss_kind == "huber":
            fit = fit_dantzig_huber(ds, r, loss, box=cfg.box_policy())
        else:
            fit = fit_dantzig_quadratic(ds, r, box=cfg.box_policy())
    except Exception as exc:  # record, never abort the sweep
        log.warning("rep %d failed: %s", rep, exc)
        nan = float("nan")
        return RepResult(
            rep=rep,
            r_used=r,
            sup_err=nan,
            l1_err=nan,
            excess_risk=nan,
            excess_se=nan,
            sign_exact=False,
            support_match=False,
            theta_star_feasible=bool(feas),
            grad_inf_norm=nan,
            l1_theta_hat=nan,
            l1_theta_star=theta_star.norms()["l1"],
            l1_delta_on_support=nan,
            l1_delta_off_support=nan,
            pattern_iters=0,
            status="failed",
        )

    tau = resolve_threshold(cfg, ds, fit.r_used)
    thresholded = threshold_estimator(fit.theta, tau)
    s_hat = sign_vector(thresholded)
    s_star = sign_vector(theta_star)
    delta = fit.theta.theta - theta_star.theta
    on = theta_star.theta != 0
    est, se = excess_risk_mc(fit.theta, theta_star, cfg, rep)
    return RepResult(
        rep=rep,
        r_used=fit.r_used,
        sup_err=float(np.max(np.abs(delta))),
        l1_err=float(np.sum(np.abs(delta))),
        excess_risk=est,
        excess_se=se,
        sign_exact=bool(np.array_equal(s_hat, s_star)),
        support_match=bool(np.array_equal(thresholded.theta != 0, on)),
        theta_star_feasible=bool(feas),
        grad_inf_norm=fit.grad_inf_norm,
        l1_theta_hat=fit.l1_norm,
        l1_theta_star=theta_star.norms()["l1"],
        l1_delta_on_support=float(np.sum(np.abs(delta[on]))),
        l1_delta_off_support=float(np.sum(np.abs(delta[~on]))),
        pattern_iters=fit.pattern_iters,
        status=fit.status,
    )


@dataclass(frozen=True)
class ExperimentResult:
    cfg: SimConfig
    per_rep: tuple
    summary: dict = field(default_factory=dict)


def _quantiles(values) -> dict:
    arr = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if arr.size == 0:
        return {"median": float("nan"), "q25": float("nan"), "q75": float("nan")}
    return {
        "median": float(np.median(arr)),
        "q25": float(np.quantile(arr, 0.25)),
        "q75": float(np.quantile(arr, 0.75)),
    }


def summarize(cfg: SimConfig, results) -> dict:
    n_ok = sum(1 for r in results if r.status != "failed")
    return {
        "reps": len(results),
        "failed": len(results) - n_ok,
        "sup_err": _quantiles(r.sup_err for r in results),
        "l1_err": _quantiles(r.l1_err for r in results),
        "excess_risk": _quantiles(r.excess_risk for r in results),
        "r_used": _quantiles(r.r_used for r in results),
        "sign_exact_freq": float(np.mean([r.sign_exact for r in results])),
        "feasible_freq": float(np.mean([r.theta_star_feasible for r in results])),
    }


def _rep_task(args):
    cfg, rep = args
    return run_rep(cfg, rep)


def run_experiment(cfg: SimConfig, jobs: int = 1) -> ExperimentResult:
    """Run all replications (optionally in parallel) and aggregate.

    Per-rep RNG streams make the output independent of scheduling order.
    """
    cfg.validate()
    reps = list(range(cfg.reps))
    if jobs and jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_rep_task, [(cfg, rep) for rep in reps]))
    else:
        results = [run_rep(cfg, rep) for rep in reps]
    return ExperimentResult(cfg=cfg, per_rep=tuple(results), summary=summarize(cfg, results))


def sweep(base: SimConfig, deltas, jobs: int = 1):
    """One experiment per delta dict applied over the base config."""
    cells = []
    for i, delta in enumerate(deltas):
        try:
            cfg = replace(base, **delta)
        except TypeError as exc:
            raise ConfigError(str(delta), f"unknown field in sweep delta: {exc}") from exc
        cells.append((f"cell{i:03d}", run_experiment(cfg, jobs=jobs)))
    return cells


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _noise_label(cfg: SimConfig) -> str:
    if cfg.noise == "student_t":
        return f"student_t(df={cfg.noise_df:g},scale={cfg.noise_scale:g})"
    return f"{cfg.noise}(scale={cfg.noise_scale:g})"


def results_to_csv(cells) -> str:
    """Long-format CSV: one row per rep plus a 'summary' row per cell."""
    lines = [",".join(CSV_COLUMNS)]
    for cell_id, exp in cells:
        cfg = exp.cfg
        base = [cell_id, None, str(cfg.n), str(cfg.M), str(cfg.s), _noise_label(cfg), cfg.loss_kind]
        for r in exp.per_rep:
            row = list(base)
            row[1] = str(r.rep)
            row += [
                _fmt(r.r_used),
                _fmt(r.sup_err),
                _fmt(r.l1_err),
                _fmt(r.excess_risk),
                _fmt(r.sign_exact),
                _fmt(r.theta_star_feasible),
                r.status,
            ]
            lines.append(",".join(row))
        s = exp.summary
        row = list(base)
        row[1] = "summary"
        row += [
            _fmt(s["r_used"]["median"]),
            _fmt(s["sup_err"]["median"]),
            _fmt(s["l1_err"]["median"]),
            _fmt(s["excess_risk"]["median"]),
            _fmt(s["sign_exact_freq"]),
            _fmt(s["feasible_freq"]),
            "summary",
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def summary_table(cells) -> str:
    """Human-readable per-cell summary for stdout."""
    header = f"{'cell':<9}{'n':>6}{'M':>5}{'s':>4}  {'loss':<10}{'median sup_err':>16}{'median l1_err':>15}{'sign freq':>11}{'feas freq':>11}{'failed':>8}"
    out = [header, "-" * len(header)]
    for cell_id, exp in cells:
        s = exp.summary
        cfg = exp.cfg
        out.append(
            f"{cell_id:<9}{cfg.n:>6}{cfg.M:>5}{cfg.s:>4}  {cfg.loss_kind:<10}"
            f"{s['sup_err']['median']:>16.6g}{s['l1_err']['median']:>15.6g}"
            f"{s['sign_exact_freq']:>11.3f}{s['feasible_freq']:>11.3f}{s['failed']:>8}"
        )
    return "\n".join(out)

"""Command-line front end: fit on CSV data, diagnose a design, run simulations.

Exit codes: 0 success, 2 usage or malformed input, 3 solver failure,
4 infeasible program with a binding box constraint. Structured output is JSON
(fit, diagnose) or long-format CSV plus a stdout summary (simulate, sweep).
The DANTZIG_LOG environment variable ({error|info|debug}) sets verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import diagnostics
from .core import BoxPolicy, DataError, Dataset, LossSpec
from .dantzig import (
    InfeasibleBoxError,
    SolverError,
    fit_dantzig_huber,
    fit_dantzig_quadratic,
    threshold_estimator,
)
from .losses import risk_gradient
from .lp import LpError, LpFailure
from .simulate import ConfigError, SimConfig, results_to_csv, run_experiment, summary_table, sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_INFEASIBLE = 4

log = logging.getLogger(__name__)


def _setup_logging():
    level = os.environ.get("DANTZIG_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def read_csv_dataset(path: str) -> Dataset:
    """Header row, feature columns then the response as the last column.
    Missing or non-numeric cells are rejected."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError("CSV needs a header row and at least one data row")
    header = rows[0]
    if len(header) < 3:
        raise DataError("CSV needs at least two feature columns plus the response")
    width = len(header)
    data = np.empty((len(rows) - 1, width))
    for i, row in enumerate(rows[1:]):
        if len(row) != width:
            raise DataError(f"row {i + 2} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if not cell:
                raise DataError(f"missing value at row {i + 2}, column {j + 1}")
            try:
                data[i, j] = float(cell)
            except ValueError as exc:
                raise DataError(f"non-numeric value {cell!r} at row {i + 2}, column {j + 1}") from exc
    x = data[:, :-1]
    y = data[:, -1]
    return Dataset(x=x, y=y, l_bound=float(np.max(np.abs(x))) or 1.0)


def _loss_from_args(args) -> LossSpec:
    if args.loss == "huber":
        if args.K is None or args.alpha is None:
            raise DataError("--loss huber requires --K and --alpha")
        return LossSpec.huber(args.K, args.alpha)
    if args.loss == "logistic-diag":
        if args.K is None:
            raise DataError("--loss logistic-diag requires --K")
        return LossSpec.logistic(args.K)
    return LossSpec.quadratic()


def _box_from_args(args) -> BoxPolicy:
    if args.box == "none":
        return BoxPolicy.none()
    if args.K is None:
        raise DataError(f"--box {args.box} requires --K")
    if args.box == "sample":
        return BoxPolicy.sample_sup(args.K)
    return BoxPolicy.l1_surrogate(args.K)


def _emit(payload: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(payload)
    else:
        sys.stdout.write(payload)


def _constants_payload(args, ds: Dataset, r: float | None) -> dict | None:
    """Full constants chain when the probability inputs are supplied."""
    if args.p_alpha is None or args.p_clip is None:
        return None
    if args.K is None or args.alpha is None or args.s is None:
        raise DataError("constants chain needs --K, --alpha and --s besides the probabilities")
    cr = diagnostics.constants_chain(
        k_bound=args.K,
        alpha=args.alpha,
        l_bound=ds.l_bound,
        m=ds.m,
        n=ds.n,
        s=args.s,
        beta=args.beta,
        p_alpha=args.p_alpha,
        p_clip=args.p_clip,
        r=r,
    )
    return cr.as_dict()


def cmd_fit(args) -> int:
    ds_raw = read_csv_dataset(args.input)
    ds = ds_raw.normalize()
    loss = _loss_from_args(args)
    if loss.kind == "logistic":
        raise DataError("no Dantzig solver for the logistic model; use 'diagnose' for its constants")

    tuning_payload = None
    if args.r == "auto":
        t = diagnostics.tuning(loss, ds.l_bound, ds.m, ds.n)  # rejects quadratic
        r = t["r"]
        tuning_payload = t
    else:
        try:
            r = float(args.r)
        except ValueError as exc:
            raise DataError(f"--r must be 'auto' or a number, got {args.r!r}") from exc
        if not r > 0:
            raise DataError("--r must be positive")

    box = _box_from_args(args)
    if loss.kind == "huber":
        fit = fit_dantzig_huber(ds, r, loss, box=box)
    else:
        fit = fit_dantzig_quadratic(ds, r, box=box)

    tau = args.threshold_mult * fit.r_used
    thresholded = threshold_estimator(fit.theta, tau)
    theta_norm = fit.theta.theta
    theta_orig = theta_norm / ds.column_scales
    constants = _constants_payload(args, ds, fit.r_used) if args.r == "auto" else None

    payload = {
        "input": args.input,
        "loss": {"kind": loss.kind, "K": loss.k_bound, "alpha": loss.alpha},
        "r_used": fit.r_used,
        "status": fit.status,
        "grad_inf_norm": fit.grad_inf_norm,
        "l1_norm": fit.l1_norm,
        "pattern_iters": fit.pattern_iters,
        "theta": list(theta_orig),
        "theta_normalized": list(theta_norm),
        "threshold_tau": tau,
        "theta_thresholded": list(thresholded.theta),
        "support": [int(j) for j in thresholded.support()],
        "signs": [int(v) for v in thresholded.sign_vector()],
        "column_scales": list(ds.column_scales),
        "tuning": tuning_payload,
        "constants": constants,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    ds_raw = read_csv_dataset(args.input)
    ds = ds_raw.normalize()
    g = diagnostics.gram(ds)
    check = diagnostics.coherence_check(g, args.s, args.beta)

    tuning_payload = {"r_tilde": diagnostics.r_tilde_value(ds.l_bound, ds.m, ds.n), "r": None}
    extra = {}
    if args.loss == "huber":
        loss = _loss_from_args(args)
        tuning_payload = diagnostics.tuning(loss, ds.l_bound, ds.m, ds.n)
    elif args.loss == "logistic-diag":
        loss = _loss_from_args(args)
        tuning_payload = diagnostics.tuning(loss, ds.l_bound, ds.m, ds.n)
        tau = diagnostics.tau_logistic(args.K)
        extra["tau_logistic"] = tau
        extra["margin_c"] = 1.0 / (tau**0.5)

    constants = _constants_payload(args, ds, tuning_payload.get("r"))
    payload = {
        "input": args.input,
        "n": ds.n,
        "M": ds.m,
        "l_bound": ds.l_bound,
        "coherence": check,
        "re_lower_bound": diagnostics.re_lower_bound(args.beta),
        "tuning": tuning_payload,
        "constants": constants,
        **extra,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.output)
    return EXIT_OK


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON in {path}: {exc}") from exc


def _config_from_dict(d: dict, seed_override: int | None) -> SimConfig:
    if not isinstance(d, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    try:
        cfg = SimConfig(**d)
    except TypeError as exc:
        bad = sorted(set(d) - set(SimConfig.__dataclass_fields__))
        key = bad[0] if bad else "<root>"
        raise ConfigError(key, f"unknown or invalid key ({exc})") from exc
    if seed_override is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed_override)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    cfg = _config_from_dict(_load_json(args.config), args.seed)
    exp = run_experiment(cfg, jobs=args.jobs)
    cells = [("cell000", exp)]
    _emit(results_to_csv(cells), args.output)
    print(summary_table(cells))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _load_json(args.config)
    if not isinstance(spec, dict) or "base" not in spec or "cells" not in spec:
        raise ConfigError("base/cells", "sweep config must contain 'base' and 'cells'")
    base = _config_from_dict(spec["base"], args.seed)
    deltas = spec["cells"]
    if not isinstance(deltas, list):
        raise ConfigError("cells", "must be a list of config overrides")
    cells = sweep(base, deltas, jobs=args.jobs)
    _emit(results_to_csv(cells), args.output)
    print(summary_table(cells))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dantzigsel",
        description="Generalized Dantzig selector: fitting, design diagnostics, Monte Carlo experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit the Dantzig selector on CSV data")
    fit.add_argument("--input", required=True)
    fit.add_argument("--output", default=None, help="JSON output path (default stdout)")
    fit.add_argument("--loss", choices=["quadratic", "huber", "logistic-diag"], default="quadratic")
    fit.add_argument("--K", type=float, default=None)
    fit.add_argument("--alpha", type=float, default=None)
    fit.add_argument("--r", default="auto", help="'auto' for theoretical tuning or a number")
    fit.add_argument("--box", choices=["sample", "l1", "none"], default="none")
    fit.add_argument("--threshold-mult", type=float, default=1.0, dest="threshold_mult")
    fit.add_argument("--p-alpha", type=float, default=None, dest="p_alpha")
    fit.add_argument("--p-clip", type=float, default=None, dest="p_clip")
    fit.add_argument("--s", type=int, default=None)
    fit.add_argument("--beta", type=float, default=2.0)
    fit.set_defaults(func=cmd_fit)

    diag = sub.add_parser("diagnose", help="coherence / tuning / constants report for a design")
    diag.add_argument("--input", required=True)
    diag.add_argument("--output", default=None)
    diag.add_argument("--loss", choices=["quadratic", "huber", "logistic-diag"], default="quadratic")
    diag.add_argument("--K", type=float, default=None)
    diag.add_argument("--alpha", type=float, default=None)
    diag.add_argument("--s", type=int, required=True)
    diag.add_argument("--beta", type=float, default=2.0)
    diag.add_argument("--p-alpha", type=float, default=None, dest="p_alpha")
    diag.add_argument("--p-clip", type=float, default=None, dest="p_clip")
    diag.set_defaults(func=cmd_diagnose)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    sim.add_argument("--config", required=True)
    sim.add_argument("--output", required=True, help="CSV output path")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a sweep of experiments from a JSON config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--output", required=True, help="CSV output path")
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleBoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, LpFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, ConfigError, LpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: reproducible runs from a JSON config.

Usage:
    vacqueue --config run.json [--seed N] [--out DIR] [--force]

The config names a command (simulate, solve, lst, tail, stability,
validate), the model quadruple, and the command's knobs.  Every run writes
a manifest.json echoing the resolved config, the seed, package version,
transform-series bindings (where a solve is involved) and wall time, so a
run can be reproduced bit for bit.  CSV series use 17 significant digits
and a dot decimal separator.

Exit codes: 0 success, 2 configuration/model validation failure,
3 numerical non-convergence or failed validation checks.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dist import DistSpec, Family, QueueModel
from .errors import (NoConvergence, NotPoissonArrivals, ParseError,
                     SeriesDiverges, TailMassTooLarge, UnstableModel,
                     VacqueueError, ValidationError)
from .simulate import des_oracle, estimate_stationary
from .solve import (OMEGA2_BINDING, SolveConfig, f0_from_series, lst_series,
                    solve_stationary, vacation_empty_probability)
from .stability import check_stability
from .tail import default_quantile_grid, verify_theorem_ratio, write_ratio_csv

COMMANDS = ("simulate", "solve", "lst", "tail", "stability", "validate")
FORMATS = ("csv", "json", "both")

_MODEL_KEYS = ("arrival", "service", "patience", "vacation")
_SOLVER_KEYS = ("x_max", "n_grid", "fp_tol", "fp_max_iter", "series_trunc_tol")
_TOP_KEYS = ("command", "seed", "model", "n_customers", "burn_in", "horizon",
             "n_paths", "solver", "theta", "output_dir", "format", "force")

_DEFAULTS = {
    "seed": 0,
    "n_customers": 100_000,
    "burn_in": None,
    "horizon": 1000,
    "n_paths": 1000,
    "theta": [0.1, 0.5, 1.0, 2.0, 5.0],
    "output_dir": "out",
    "format": "both",
    "force": False,
}


@dataclass
class RunConfig:
    """Validated run description with defaults applied."""

    command: str
    model: QueueModel
    seed: int
    n_customers: int
    burn_in: int | None
    horizon: int
    n_paths: int
    solver: SolveConfig
    theta: list[float]
    output_dir: str
    format: str
    force: bool
    resolved: dict = field(default_factory=dict)


def _reject_unknown(mapping: dict, allowed, where: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ValidationError(f"unknown key {where}{key}")


def _parse_dist(obj, where: str) -> DistSpec:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where} must be an object with family and params")
    _reject_unknown(obj, ("family", "params"), f"{where}.")
    fam_name = obj.get("family")
    try:
        fam = Family(fam_name)
    except ValueError:
        raise ValidationError(
            f"{where}.family {fam_name!r} is not one of {[f.value for f in Family]}")
    params = obj.get("params", [])
    if not isinstance(params, list) or not all(isinstance(p, (int, float)) for p in params):
        raise ValidationError(f"{where}.params must be a list of numbers")
    # name the violated invariant the way a reader checks it
    positive_param_families = {
        Family.EXPONENTIAL: (0,), Family.PARETO: (0, 1), Family.WEIBULL: (0, 1),
    }
    for idx in positive_param_families.get(fam, ()):
        if idx < len(params) and params[idx] <= 0:
            raise ValidationError(f"{where}.params[{idx}] > 0")
    try:
        return DistSpec(fam, tuple(params))
    except VacqueueError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate the JSON run configuration.

    Unknown keys are rejected at every level; defaults are applied and
    echoed back in RunConfig.resolved.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError("top-level config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "")

    command = raw.get("command")
    if command not in COMMANDS:
        raise ValidationError(f"command must be one of {COMMANDS}, got {command!r}")
    if "model" not in raw or not isinstance(raw["model"], dict):
        raise ValidationError("model must be an object with arrival/service/patience/vacation")
    _reject_unknown(raw["model"], _MODEL_KEYS, "model.")
    dists = {}
    for key in _MODEL_KEYS:
        if key not in raw["model"]:
            raise ValidationError(f"model.{key} is required")
        dists[key] = _parse_dist(raw["model"][key], key)
    try:
        model = QueueModel(**dists)
    except VacqueueError as exc:
        raise ValidationError(str(exc)) from exc

    cfg = dict(_DEFAULTS)
    for key in ("seed", "n_customers", "burn_in", "horizon", "n_paths",
                "theta", "output_dir", "format", "force"):
        if key in raw:
            cfg[key] = raw[key]
    seed = cfg["seed"]
    if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    if cfg["format"] not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}")
    for key in ("n_customers", "horizon", "n_paths"):
        if not isinstance(cfg[key], int) or cfg[key] <= 0:
            raise ValidationError(f"{key} must be a positive integer")
    if cfg["burn_in"] is not None and (not isinstance(cfg["burn_in"], int)
                                       or not 0 <= cfg["burn_in"] < cfg["n_customers"]):
        raise ValidationError("burn_in must satisfy 0 <= burn_in < n_customers")
    theta = cfg["theta"]
    if (not isinstance(theta, list) or not theta
            or not all(isinstance(t, (int, float)) and t >= 0 for t in theta)):
        raise ValidationError("theta must be a nonempty list of nonnegative reals")

    solver_raw = raw.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise ValidationError("solver must be an object")
    _reject_unknown(solver_raw, _SOLVER_KEYS, "solver.")
    try:
        solver = SolveConfig(**solver_raw)
    except (VacqueueError, TypeError) as exc:
        raise ValidationError(f"solver: {exc}") from exc

    resolved = {
        "command": command,
        "seed": seed,
        "model": {k: {"family": dists[k].family.value, "params": list(dists[k].params)}
                  for k in _MODEL_KEYS},
        "n_customers": cfg["n_customers"],
        "burn_in": cfg["burn_in"],
        "horizon": cfg["horizon"],
        "n_paths": cfg["n_paths"],
        "solver": {"x_max": solver.x_max, "n_grid": solver.n_grid,
                   "fp_tol": solver.fp_tol, "fp_max_iter": solver.fp_max_iter,
                   "series_trunc_tol": solver.series_trunc_tol},
        "theta": [float(t) for t in theta],
        "output_dir": str(cfg["output_dir"]),
        "format": cfg["format"],
        "force": bool(cfg["force"]),
    }
    return RunConfig(
        command=command, model=model, seed=seed,
        n_customers=cfg["n_customers"], burn_in=cfg["burn_in"],
        horizon=cfg["horizon"], n_paths=cfg["n_paths"], solver=solver,
        theta=[float(t) for t in theta], output_dir=str(cfg["output_dir"]),
        format=cfg["format"], force=bool(cfg["force"]), resolved=resolved,
    )


# ---------------------------------------------------------------------------
# command implementations

def _out_file(out_dir: Path, name: str, force: bool) -> Path:
    path = out_dir / name
    if path.exists() and not force:
        raise ValidationError(f"refusing to overwrite {path} (use --force)")
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(config: RunConfig, out_dir: Path, manifest: dict) -> None:
    summary = estimate_stationary(config.model, config.n_customers,
                                  burn_in=config.burn_in, seed=config.seed)
    if config.format in ("csv", "both"):
        summary.to_csv(_out_file(out_dir, "ecdf.csv", config.force))
    if config.format in ("json", "both"):
        summary.to_json(_out_file(out_dir, "ecdf.json", config.force))
    manifest["summary"] = summary.header_dict()


def _solve_with_meta(config: RunConfig, manifest: dict):
    result = solve_stationary(config.model, config.solver)
    manifest["omega2_binding"] = result.omega2_binding
    manifest["product_convention"] = result.product_convention
    manifest["lambda2_convention"] = result.lambda2_convention
    return result


def _cmd_solve(config: RunConfig, out_dir: Path, manifest: dict) -> None:
    result = _solve_with_meta(config, manifest)
    if config.format in ("csv", "both"):
        result.to_csv(_out_file(out_dir, "density.csv", config.force))
    if config.format in ("json", "both"):
        result.to_json(_out_file(out_dir, "solve.json", config.force))
    manifest["solve"] = result.header_dict()


def _cmd_lst(config: RunConfig, out_dir: Path, manifest: dict) -> None:
    p0 = f0_from_series(config.model, config.solver)
    lam = config.model.poisson_rate
    lambda2 = lam * p0 / vacation_empty_probability(config.model)
    values = [lst_series(config.model, th, config.solver, p0=p0, lambda2=lambda2)
              for th in config.theta]
    manifest["omega2_binding"] = OMEGA2_BINDING
    manifest["product_convention"] = "inclusive"
    manifest["lst"] = {"p0_series": p0, "lambda2": lambda2}
    if config.format in ("csv", "both"):
        with open(_out_file(out_dir, "lst.csv", config.force), "w", newline="") as fh:
            fh.write("theta,value\n")
            for th, val in zip(config.theta, values):
                fh.write(f"{th:.17g},{val:.17g}\n")
    if config.format in ("json", "both"):
        _write_json(_out_file(out_dir, "lst.json", config.force),
                    {"p0_series": p0, "lambda2": lambda2,
                     "theta": config.theta, "values": values})


def _cmd_tail(config: RunConfig, out_dir: Path, manifest: dict) -> None:
    result = _solve_with_meta(config, manifest)
    summary = estimate_stationary(config.model, config.n_customers,
                                  burn_in=config.burn_in, seed=config.seed)
    grid = default_quantile_grid(config.model.service, 24, 0.99, 0.999)
    report = verify_theorem_ratio(config.model, summary, result, grid)
    if config.format in ("csv", "both"):
        write_ratio_csv(report, _out_file(out_dir, "ratio.csv", config.force))
    if config.format in ("json", "both"):
        report.to_json(_out_file(out_dir, "tail.json", config.force))
    manifest["tail"] = {"target_constant": report.target_constant,
                        "exceedances_at_top": report.exceedances_at_top,
                        "max_relative_gap": float(np.max(report.relative_gap))}


def _cmd_stability(config: RunConfig, out_dir: Path, manifest: dict) -> None:
    report = check_stability(config.model, config.n_paths, config.horizon, config.seed)
    _write_json(_out_file(out_dir, "stability.json", config.force), report.to_dict())
    manifest["stability"] = report.to_dict()


def _is_mm1_reduction(model: QueueModel) -> bool:
    return (model.no_balking and model.no_vacations
            and model.arrival.family is Family.EXPONENTIAL
            and model.service.family is Family.EXPONENTIAL)


def _cmd_validate(config: RunConfig, out_dir: Path, manifest: dict) -> None:
    """Cross-check the two simulators pathwise and the solver against either
    the closed form (for the no-vacation no-balking exponential reduction)
    or the Monte Carlo band."""
    from .recursion import run_sequences
    model = config.model
    n = min(config.n_customers, 10_000)
    trace = run_sequences(model, n, config.seed, include_y=False)
    w_des = des_oracle(model, n, config.seed)
    srs_des_max = float(np.max(np.abs(trace.w[:n] - w_des)))
    checks = {"srs_des_max_abs_diff": srs_des_max,
              "srs_des_ok": srs_des_max <= 1e-9}

    if model.poisson_rate is not None:
        result = _solve_with_meta(config, manifest)
        if _is_mm1_reduction(model):
            lam = model.poisson_rate
            mu = model.service.params[0]
            rho = lam / mu
            p0_err = abs(result.p0 - (1.0 - rho))
            x = result.grid
            f_true = lam * (1.0 - rho) * np.exp(-(mu - lam) * x)
            f_err = float(np.max(np.abs(result.f - f_true)))
            checks.update({"closed_form_p0_error": p0_err,
                           "closed_form_f_sup_error": f_err,
                           "solver_ok": p0_err <= 1e-3 and f_err <= 1e-3})
        else:
            summary = estimate_stationary(model, config.n_customers,
                                          burn_in=config.burn_in, seed=config.seed)
            cdf_solver = np.interp(summary.grid, result.grid, result.cdf())
            sup = float(np.max(np.abs(cdf_solver - summary.cdf)))
            checks.update({"solver_mc_sup_distance": sup,
                           "mc_band_2x": 2.0 * summary.ci_halfwidth,
                           "solver_ok": sup <= 2.0 * summary.ci_halfwidth})
    ok = all(v for k, v in checks.items() if k.endswith("_ok"))
    checks["all_ok"] = ok
    _write_json(_out_file(out_dir, "validate.json", config.force), checks)
    manifest["validate"] = checks
    if not ok:
        raise NoConvergence(0, "validation checks failed (see validate.json)")


_RUNNERS = {
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "lst": _cmd_lst,
    "tail": _cmd_tail,
    "stability": _cmd_stability,
    "validate": _cmd_validate,
}


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    out_dir = Path(config.output_dir)
    started = time.time()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "config": config.resolved,
            "seed": config.seed,
            "version": __version__,
            "command": config.command,
        }
        _RUNNERS[config.command](config, out_dir, manifest)
        manifest["wall_time_s"] = time.time() - started
        with open(out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return 0
    except (ValidationError, UnstableModel, NotPoissonArrivals) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (NoConvergence, SeriesDiverges, TailMassTooLarge) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except VacqueueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vacqueue",
        description="Single-server vacation queue with balking: simulation and analysis runs.")
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--force", action="store_true", help="allow overwriting output files")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(text)
    except (ParseError, ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config.seed = args.seed
        config.resolved["seed"] = args.seed
    if args.out is not None:
        config.output_dir = args.out
        config.resolved["output_dir"] = args.out
    if args.force:
        config.force = True
        config.resolved["force"] = True
    return run(config)


if __name__ == "__main__":
    sys.exit(main())

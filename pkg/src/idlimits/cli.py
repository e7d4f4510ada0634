"""Command-line driver: JSON config in, CSV table plus run manifest out.

Exit status: 0 when every enforced bound check passes, 1 on configuration
errors, 2 when a bound check fails beyond its tolerance.

Config schema (JSON object)::

    horizon      int >= 1                      required
    num_runs     int >= 1                      required
    seed         int >= 0                      required
    noise_var    float > 0                     required
    cost         {"q": float > 0, "r": float > 0}           required
    policy       {"kind": "zero" | "linear" | "sin_modulated" | "open_loop",
                  "gain": float, "sequence": [float, ...]}  required
    theta        {"mode": "fixed", "value": [a, b]} | {"mode": "sample_prior"}   required
    prior        {"mean": [m0, m1], "cov": [[., .], [., .]]}  default N(0, I)
    sweep        {"path": "policy.gain" | "noise_var" | "cost.q" | "cost.r",
                  "values": [float, ...]}                   optional
    guard        float > 0, divergence threshold on |x_t|  default 1e6
    x0           must be 0 if present
    budget       float, cost budget echoed in reports       optional
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from idlimits import __version__, kernel
from idlimits.errors import AllRunsDivergedError, ConfigError
from idlimits.experiment import (ExperimentConfig, SweepRow, SweepSpec, bound_checks,
                                 run_experiment, sweep)
from idlimits.model import DEFAULT_GUARD, PolicySpec

CSV_COLUMNS = (
    "grid_value", "T", "N_eff", "n_diverged", "rate_bits_per_step", "rate_stderr",
    "L_T_bits", "P_hat", "J_hat", "J_stderr", "capacity_of_Phat_bits",
    "sum_stepwise_capacity_bits", "thm3_power_bound", "det_PiT_mean", "det_lower_bound",
)

_REQUIRED = ("horizon", "num_runs", "seed", "noise_var", "cost", "policy", "theta")
_KNOWN = set(_REQUIRED) | {"prior", "sweep", "guard", "x0", "budget"}


# -- config ----------------------------------------------------------------

def _get(obj: dict, key: str, path: str, required: bool = True, default: Any = None) -> Any:
    if key not in obj:
        if required:
            raise ConfigError(path, "missing required field")
        return default
    return obj[key]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _vector(value: Any, path: str, n: int = 2) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(path, f"expected a list of {n} numbers")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def config_from_dict(raw: Any) -> ExperimentConfig:
    raw = _object(raw, "<root>")
    unknown = sorted(set(raw) - _KNOWN)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    for key in _REQUIRED:
        _get(raw, key, key)

    x0 = _number(_get(raw, "x0", "x0", required=False, default=0.0), "x0")
    if x0 != 0.0:
        raise ConfigError("x0", f"initial state is fixed at 0, got {x0}")

    cost = _object(raw["cost"], "cost")
    q = _number(_get(cost, "q", "cost.q"), "cost.q")
    r = _number(_get(cost, "r", "cost.r"), "cost.r")

    pol = _object(raw["policy"], "policy")
    kind = _get(pol, "kind", "policy.kind")
    if not isinstance(kind, str):
        raise ConfigError("policy.kind", f"expected a string, got {kind!r}")
    gain = _number(pol.get("gain", 0.0), "policy.gain")
    if kind in ("linear", "sin_modulated") and "gain" not in pol:
        raise ConfigError("policy.gain", f"missing required field for {kind} policy")
    seq_raw = pol.get("sequence", [])
    if not isinstance(seq_raw, list):
        raise ConfigError("policy.sequence", "expected a list of numbers")
    seq = tuple(_number(v, f"policy.sequence[{i}]") for i, v in enumerate(seq_raw))
    policy = PolicySpec(kind, gain, seq)

    th = _object(raw["theta"], "theta")
    mode = _get(th, "mode", "theta.mode")
    theta = None
    if mode == "fixed":
        theta = _vector(_get(th, "value", "theta.value"), "theta.value")
    elif "value" in th:
        raise ConfigError("theta.value", f"not allowed with mode {mode!r}")

    prior = _object(_get(raw, "prior", "prior", required=False, default={}), "prior")
    prior_mean = _vector(prior.get("mean", [0.0, 0.0]), "prior.mean")
    cov_raw = prior.get("cov", [[1.0, 0.0], [0.0, 1.0]])
    if not isinstance(cov_raw, list) or len(cov_raw) != 2:
        raise ConfigError("prior.cov", "expected a 2x2 nested list")
    prior_cov = tuple(_vector(row, f"prior.cov[{i}]") for i, row in enumerate(cov_raw))

    sweep_spec = None
    if raw.get("sweep") is not None:
        sw = _object(raw["sweep"], "sweep")
        path = _get(sw, "path", "sweep.path")
        values = _get(sw, "values", "sweep.values")
        if not isinstance(values, list):
            raise ConfigError("sweep.values", "expected a list of numbers")
        sweep_spec = SweepSpec(path, tuple(_number(v, f"sweep.values[{i}]")
                                           for i, v in enumerate(values)))

    budget = raw.get("budget")
    return ExperimentConfig(
        horizon=_integer(raw["horizon"], "horizon"),
        num_runs=_integer(raw["num_runs"], "num_runs"),
        noise_var=_number(raw["noise_var"], "noise_var"),
        q=q, r=r, policy=policy,
        seed=_integer(raw["seed"], "seed"),
        theta_mode=mode if isinstance(mode, str) else repr(mode),
        theta=theta, prior_mean=prior_mean, prior_cov=prior_cov,
        sweep=sweep_spec,
        guard=_number(raw.get("guard", DEFAULT_GUARD), "guard"),
        budget=None if budget is None else _number(budget, "budget"),
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    """Canonical JSON-ready form; ``config_from_dict`` inverts it exactly."""
    theta: dict = {"mode": config.theta_mode}
    if config.theta is not None:
        theta["value"] = list(config.theta)
    policy: dict = {"kind": config.policy.kind, "gain": config.policy.gain}
    if config.policy.sequence:
        policy["sequence"] = list(config.policy.sequence)
    out = {
        "horizon": config.horizon,
        "num_runs": config.num_runs,
        "seed": config.seed,
        "noise_var": config.noise_var,
        "cost": {"q": config.q, "r": config.r},
        "policy": policy,
        "theta": theta,
        "prior": {"mean": list(config.prior_mean), "cov": [list(r) for r in config.prior_cov]},
        "guard": config.guard,
    }
    if config.sweep is not None:
        out["sweep"] = {"path": config.sweep.path, "values": list(config.sweep.values)}
    if config.budget is not None:
        out["budget"] = config.budget
    return out


def parse_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return config_from_dict(raw)


# -- output ----------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    return "%.17g" % value


def csv_row(row: SweepRow) -> dict:
    s = row.stats
    b = s.bounds
    return {
        "grid_value": row.value,
        "T": s.horizon,
        "N_eff": s.n_eff,
        "n_diverged": s.n_diverged,
        "rate_bits_per_step": s.rate,
        "rate_stderr": s.rate_se,
        "L_T_bits": s.cumulative,
        "P_hat": s.power,
        "J_hat": s.cost,
        "J_stderr": s.cost_se,
        "capacity_of_Phat_bits": b.capacity_of_mean_power,
        "sum_stepwise_capacity_bits": b.sum_stepwise_capacity,
        "thm3_power_bound": b.cost_power_bound,
        "det_PiT_mean": s.det_final_mean,
        "det_lower_bound": b.det_lower_bound,
    }


def emit_csv(table: list[SweepRow], path) -> None:
    """Write one header line and one line per row; floats use 17 significant digits."""
    if not table:
        raise ValueError("cannot write an empty table")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in table:
            values = csv_row(row)
            writer.writerow([_fmt(values[c]) for c in CSV_COLUMNS])


@dataclass
class RunManifest:
    config: dict
    version: str
    seed: int
    timestamp: str
    rows: list = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.__dict__, fh, indent=2, allow_nan=True)
            fh.write("\n")


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def format_summary(config: ExperimentConfig, table: list[SweepRow]) -> str:
    lines = []
    label = config.sweep.path if config.sweep is not None else "base"
    for row in table:
        s = row.stats
        what = ("mutual information estimate" if s.theta_mode == "sample_prior"
                else "empirical log-det reduction")
        head = f"{label} = {row.value:g}" if config.sweep is not None else "base config"
        lines.append(f"== {head}: T={s.horizon}, runs used {s.n_eff}/{s.n_runs} "
                     f"({s.n_diverged} diverged), theta {s.theta_mode} [{what}]")
        lines.append(f"   rate {s.rate:.6g} bits/step (se {s.rate_se:.3g}), "
                     f"C(P)={s.bounds.capacity_of_mean_power:.6g}, P={s.power:.6g}, "
                     f"J={s.cost:.6g}")
        for c in row.checks:
            status = "PASS" if c.passed else "FAIL"
            tag = "" if c.enforced else " (advisory)"
            lines.append(f"   {status:4s} {c.name:20s} {c.description}: lhs={c.lhs:.10g} "
                         f"rhs={c.rhs:.10g} margin={c.margin:.4g}{tag}")
    return "\n".join(lines)


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="idlimits",
        description="Monte Carlo check of capacity limits on closed-loop identification rate.")
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--out", default="results.csv", help="CSV output path (default results.csv)")
    p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: all cores)")
    p.add_argument("--summary", action="store_true",
                   help="print the bound-check table")
    return p


def run_table(config: ExperimentConfig, threads: int) -> list[SweepRow]:
    if config.sweep is not None:
        return sweep(config, threads)
    stats = run_experiment(config, threads)
    return [SweepRow(math.nan, stats, bound_checks(stats))]


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"configuration error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 1
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        print("configuration error: --threads must be >= 1", file=sys.stderr)
        return 1

    try:
        table = run_table(config, threads)
    except AllRunsDivergedError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        emit_csv(table, args.out)
        RunManifest(
            config=config_to_dict(config),
            version=__version__,
            seed=config.seed,
            timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
            rows=[csv_row(r) for r in table],
        ).write(manifest_path(args.out))
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 1

    if args.summary:
        print(f"backend: {kernel.BACKEND}")
        print(format_summary(config, table))

    failed = [(row, c) for row in table for c in row.checks if c.enforced and not c.passed]
    for row, c in failed:
        print(f"BOUND VIOLATED [{config.sweep.path if config.sweep else 'base'}={row.value:g}] "
              f"{c.name}: {c.description}; lhs={c.lhs!r} rhs={c.rhs!r}", file=sys.stderr)
    return 2 if failed else 0

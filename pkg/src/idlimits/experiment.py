"""Monte Carlo engine: seeded runs, excitation cost, aggregation, bound checks, sweeps.

Run ``i`` of grid point ``g`` draws from the streams keyed ``(seed, g, i, tag)``,
so every run is reproducible on its own and results do not depend on how runs
are scheduled across threads. Reductions walk runs in index order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from idlimits import kernel
from idlimits.errors import AllRunsDivergedError, ConfigError
from idlimits.estimator import Belief, det2, is_spd
from idlimits.infotheory import BoundReport, UtilityLedger, awgn_capacity, bound_report
from idlimits.model import (DEFAULT_GUARD, PolicySpec, Trajectory, draw_noise_sequence,
                            sample_parameters)
from idlimits.rng import NOISE_STREAM, THETA_STREAM, derive_stream

SE_BAND = 3.0
CONCAVITY_TOL = 1e-10

SWEEP_PATHS = ("policy.gain", "noise_var", "cost.q", "cost.r")


@dataclass(frozen=True)
class SweepSpec:
    path: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.path not in SWEEP_PATHS:
            raise ConfigError("sweep.path", f"unknown parameter path {self.path!r}; "
                              f"expected one of {', '.join(SWEEP_PATHS)}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("sweep.values", "grid must be non-empty")
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("sweep.values", "grid values must be finite")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ExperimentConfig:
    horizon: int
    num_runs: int
    noise_var: float
    q: float
    r: float
    policy: PolicySpec
    seed: int
    theta_mode: str = "fixed"
    theta: Optional[tuple[float, float]] = None
    prior_mean: tuple[float, float] = (0.0, 0.0)
    prior_cov: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    sweep: Optional[SweepSpec] = None
    guard: float = DEFAULT_GUARD
    budget: Optional[float] = None

    def __post_init__(self):
        if not (isinstance(self.horizon, int) and self.horizon >= 1):
            raise ConfigError("horizon", f"must be an integer >= 1, got {self.horizon!r}")
        if not (isinstance(self.num_runs, int) and self.num_runs >= 1):
            raise ConfigError("num_runs", f"must be an integer >= 1, got {self.num_runs!r}")
        if not (math.isfinite(self.noise_var) and self.noise_var > 0):
            raise ConfigError("noise_var", f"must be > 0, got {self.noise_var}")
        if not (math.isfinite(self.q) and self.q > 0):
            raise ConfigError("cost.q", f"must be > 0, got {self.q}")
        if not (math.isfinite(self.r) and self.r > 0):
            raise ConfigError("cost.r", f"must be > 0, got {self.r}")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        if not (self.guard > 0 and not math.isnan(self.guard)):
            raise ConfigError("guard", f"must be > 0, got {self.guard}")
        if self.theta_mode == "fixed":
            if self.theta is None or len(self.theta) != 2:
                raise ConfigError("theta.value", "fixed mode needs a 2-vector [a, b]")
            if not all(math.isfinite(v) for v in self.theta):
                raise ConfigError("theta.value", "parameters must be finite")
            object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        elif self.theta_mode == "sample_prior":
            if self.theta is not None:
                raise ConfigError("theta.value", "sample_prior mode takes no fixed value")
        else:
            raise ConfigError("theta.mode", f"expected 'fixed' or 'sample_prior', "
                              f"got {self.theta_mode!r}")
        mean = tuple(float(v) for v in self.prior_mean)
        cov = tuple(tuple(float(v) for v in row) for row in self.prior_cov)
        if len(mean) != 2 or not all(math.isfinite(v) for v in mean):
            raise ConfigError("prior.mean", "must be a finite 2-vector")
        if len(cov) != 2 or any(len(row) != 2 for row in cov) or not is_spd(cov):
            raise ConfigError("prior.cov", "must be a symmetric positive definite 2x2 matrix")
        object.__setattr__(self, "prior_mean", mean)
        object.__setattr__(self, "prior_cov", cov)
        self.policy.check_horizon(self.horizon)

    @property
    def prior(self) -> Belief:
        return Belief(self.prior_mean, self.prior_cov)

    @property
    def grid(self) -> tuple[float, ...]:
        return self.sweep.values if self.sweep is not None else ()

    def with_value(self, path: str, value: float) -> "ExperimentConfig":
        """Copy of the config with one sweepable parameter replaced."""
        if path == "policy.gain":
            return replace(self, policy=replace(self.policy, gain=value))
        if path == "noise_var":
            return replace(self, noise_var=value)
        if path == "cost.q":
            return replace(self, q=value)
        if path == "cost.r":
            return replace(self, r=value)
        raise ConfigError("sweep.path", f"unknown parameter path {path!r}")


def excitation_cost(trajectory: Trajectory, q: float, r: float) -> float:
    """Single-run quadratic cost ``(sum q x_t^2 + r u_t^2 + q x_T^2) / T``."""
    if trajectory.diverged:
        raise ValueError("excitation cost is undefined for a diverged trajectory")
    x = trajectory.states
    u = trajectory.inputs
    T = len(u)
    total = math.fsum(np.concatenate([q * x[:-1] ** 2, r * u ** 2, [q * x[-1] ** 2]]))
    return total / T


def channel_power(trajectory: Trajectory) -> np.ndarray:
    """Per-step squared channel input ``y_t^2``."""
    return np.asarray(trajectory.channel_inputs, dtype=float) ** 2


@dataclass(frozen=True, eq=False)
class RunRecord:
    run_index: int
    theta: np.ndarray
    trajectory: Trajectory
    ledger: UtilityLedger
    cost: float
    belief: Belief

    @property
    def diverged(self) -> bool:
        return self.trajectory.diverged


def run_single(config: ExperimentConfig, run_index: int, grid_index: int = 0,
               backend: Optional[str] = None) -> RunRecord:
    """Simulate one realization and run the estimator along it."""
    if config.theta_mode == "sample_prior":
        theta = sample_parameters(config.prior,
                                  derive_stream(config.seed, grid_index, run_index, THETA_STREAM))
    else:
        theta = np.array(config.theta)
    noises = draw_noise_sequence(config.noise_var, config.horizon,
                                 derive_stream(config.seed, grid_index, run_index, NOISE_STREAM))
    out = kernel.run_rollout(theta, config.policy, noises, config.noise_var,
                             config.prior_mean, config.prior_cov, config.guard, backend=backend)
    n = len(out.inputs)
    traj = Trajectory(theta=theta, states=out.states, inputs=out.inputs, noises=noises[:n],
                      channel_inputs=out.channel_inputs, diverged=out.diverged)
    prior_cov = np.array(config.prior_cov)
    if out.diverged:
        # the estimator never absorbed the guard-crossing transition
        return RunRecord(run_index, theta, traj,
                         UtilityLedger(out.utilities, math.log2(det2(prior_cov)), math.nan),
                         math.nan, None)
    belief = Belief(out.mean, out.cov, len(out.utilities))
    ledger = UtilityLedger(out.utilities, math.log2(det2(prior_cov)), math.log2(det2(out.cov)))
    return RunRecord(run_index, theta, traj, ledger, excitation_cost(traj, config.q, config.r),
                     belief)


# -- aggregation -----------------------------------------------------------

def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    """Mean and its standard error; the error is NaN for fewer than two samples."""
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _columnwise_mean_se(rows: Iterable[np.ndarray], width: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and standard error with Neumaier-compensated accumulation."""
    rows = list(rows)
    n = len(rows)
    total = np.zeros(width)
    comp = np.zeros(width)
    for row in rows:
        t = total + row
        big = np.abs(total) >= np.abs(row)
        comp += np.where(big, (total - t) + row, (row - t) + total)
        total = t
    mean = (total + comp) / n
    if n < 2:
        return mean, np.full(width, math.nan)
    ss = np.zeros(width)
    ss_comp = np.zeros(width)
    for row in rows:
        d = (row - mean) ** 2
        t = ss + d
        ss_comp += np.where(ss >= d, (ss - t) + d, (d - t) + ss)
        ss = t
    var = (ss + ss_comp) / (n - 1)
    return mean, np.sqrt(var / n)


def _band(se: float) -> float:
    """``SE_BAND`` standard errors, or zero when the error is unavailable."""
    return 0.0 if math.isnan(se) else SE_BAND * se


@dataclass(frozen=True, eq=False)
class AggregateStats:
    """Monte Carlo estimates over the non-diverged runs of one configuration.

    In fixed-theta mode ``cumulative`` is the empirical log-det reduction; it
    equals the mutual information between parameters and states only when theta
    is drawn from the prior.
    """

    horizon: int
    n_runs: int
    n_eff: int
    n_diverged: int
    theta_mode: str
    cumulative: float
    cumulative_se: float
    step_utility_mean: np.ndarray
    step_utility_se: np.ndarray
    step_power: np.ndarray
    power: float
    power_gap_se: float
    cost: float
    cost_se: float
    det_final_mean: float
    det_final_se: float
    det_prior: float
    bounds: BoundReport

    @property
    def rate(self) -> float:
        return self.cumulative / self.horizon

    @property
    def rate_se(self) -> float:
        return self.cumulative_se / self.horizon


def aggregate(results: Sequence[RunRecord], config: ExperimentConfig) -> AggregateStats:
    """Combine run records (in the given order) into :class:`AggregateStats`."""
    used = [r for r in results if not r.diverged]
    n_div = len(results) - len(used)
    if not used:
        raise AllRunsDivergedError(
            f"all {len(results)} runs crossed the divergence guard {config.guard:g}; "
            "no statistics available")
    T = config.horizon
    cum, cum_se = _mean_se([r.ledger.cumulative for r in used])
    cost, cost_se = _mean_se([r.cost for r in used])
    det_mean, det_se = _mean_se([det2(r.belief.cov) for r in used])
    powers = [channel_power(r.trajectory) for r in used]
    # paired per-run gap P - (2/q) J - 2W, whose mean must stay <= 0
    gap_mean, gap_se = _mean_se([math.fsum(p) / T - 2.0 / config.q * r.cost - 2.0 * config.noise_var
                                 for p, r in zip(powers, used)])
    step_power, _ = _columnwise_mean_se(powers, T)
    f_mean, f_se = _columnwise_mean_se([r.ledger.steps for r in used], T)
    det_prior = det2(config.prior_cov)
    report = bound_report(step_power, config.noise_var, cost, config.q, det_prior, cum)
    return AggregateStats(
        horizon=T, n_runs=len(results), n_eff=len(used), n_diverged=n_div,
        theta_mode=config.theta_mode,
        cumulative=cum, cumulative_se=cum_se,
        step_utility_mean=f_mean, step_utility_se=f_se,
        step_power=step_power, power=report.mean_power, power_gap_se=gap_se,
        cost=cost, cost_se=cost_se,
        det_final_mean=det_mean, det_final_se=det_se, det_prior=det_prior,
        bounds=report,
    )


# -- bound checks ----------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    """One verified inequality ``lhs <= rhs`` (``rhs`` already includes the tolerance band).

    The capacity checks bound the mutual information between parameters and
    states. They are theorems only when theta is drawn from the prior and no run
    was dropped by the divergence guard (dropping runs conditions on the
    future). Otherwise they are reported with ``enforced=False``.
    """

    name: str
    description: str
    lhs: float
    rhs: float
    enforced: bool = True
    strict: bool = False

    @property
    def passed(self) -> bool:
        return self.lhs < self.rhs if self.strict else self.lhs <= self.rhs

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def bound_checks(stats: AggregateStats) -> list[BoundCheck]:
    b = stats.bounds
    prior_sampled = stats.theta_mode == "sample_prior" and stats.n_diverged == 0
    excess = stats.step_utility_mean - b.capacities - SE_BAND * np.nan_to_num(stats.step_utility_se)
    worst = int(np.argmax(excess))
    return [
        BoundCheck(
            "stepwise-capacity",
            f"max_t [F_t - C(P_t) - {SE_BAND:g}se] <= 0 (worst t={worst + 1})",
            float(excess[worst]), 0.0, enforced=prior_sampled),
        BoundCheck(
            "cumulative-capacity",
            f"L_T <= sum_t C(P_t) + {SE_BAND:g}se",
            stats.cumulative, b.sum_stepwise_capacity + _band(stats.cumulative_se),
            enforced=prior_sampled),
        BoundCheck(
            "capacity-concavity",
            "sum_t C(P_t) <= T C(P) + 1e-10",
            b.sum_stepwise_capacity, b.aggregate_capacity + CONCAVITY_TOL),
        BoundCheck(
            "rate-below-capacity",
            "L_T / T < C(P)",
            stats.rate, b.capacity_of_mean_power, enforced=prior_sampled, strict=True),
        BoundCheck(
            "det-lower-bound",
            f"det(Pi_0) 2^(-2 L_T) - {SE_BAND:g}se <= mean det(Pi_T)",
            b.det_lower_bound - _band(stats.det_final_se), stats.det_final_mean),
        BoundCheck(
            "cost-power",
            f"P <= (2/q) J + 2W + {SE_BAND:g}se",
            stats.power, b.cost_power_bound + _band(stats.power_gap_se)),
    ]


# -- orchestration ---------------------------------------------------------

def _collect(config: ExperimentConfig, grid_index: int, threads: int,
             backend: Optional[str]) -> list[RunRecord]:
    indices = range(config.num_runs)
    if threads <= 1:
        return [run_single(config, i, grid_index, backend) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order, so reductions see runs by index
        return list(pool.map(lambda i: run_single(config, i, grid_index, backend), indices))


def run_experiment(config: ExperimentConfig, threads: int = 1, grid_index: int = 0,
                   backend: Optional[str] = None) -> AggregateStats:
    """Run all realizations of ``config`` and aggregate them."""
    return aggregate(_collect(config, grid_index, threads, backend), config)


@dataclass(frozen=True, eq=False)
class SweepRow:
    value: float
    stats: AggregateStats
    checks: list[BoundCheck] = field(default_factory=list)


def sweep(config: ExperimentConfig, threads: int = 1,
          backend: Optional[str] = None) -> list[SweepRow]:
    """One experiment per grid value, ordered by value, each with its own derived streams."""
    if config.sweep is None:
        raise ConfigError("sweep", "config has no sweep section")
    rows = []
    for g, value in enumerate(config.sweep.values):
        cfg = config.with_value(config.sweep.path, value)
        stats = run_experiment(cfg, threads, grid_index=g, backend=backend)
        rows.append(SweepRow(value, stats, bound_checks(stats)))
    rows.sort(key=lambda row: row.value)
    return rows



"""Information utilities, AWGN capacity and the learning-rate bounds built from them.

Every information quantity is in bits (base-2 logarithms).

The identification loop behaves like a Gaussian channel with noiseless feedback:
the channel input is ``y_t = z_{t-1} . theta`` and the output is
``x_t = y_t + w_{t-1}``. The expected log-det reduction of the estimator
covariance is then limited by capacity:

    E[L_T] <= sum_t C(P_t) <= T C(P),   C(P) = 0.5 log2(1 + P / W)

and the mean channel power is limited by the excitation cost,
``P <= (2/q) J + 2W``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from idlimits.estimator import det2, is_spd

Z95 = 1.959963984540054


def _require_spd(m, name: str) -> None:
    if not is_spd(m):
        raise ValueError(f"{name} must be symmetric positive definite")


def step_utility(cov_prev, cov_next) -> float:
    """Entropy reduction ``0.5 log2(det cov_prev / det cov_next)`` across one update."""
    _require_spd(cov_prev, "cov_prev")
    _require_spd(cov_next, "cov_next")
    return 0.5 * (math.log2(det2(cov_prev)) - math.log2(det2(cov_next)))


def step_utility_closed_form(cov_prev, z, noise_var: float) -> float:
    """Same quantity via the determinant lemma: ``0.5 log2(1 + z^T cov z / W)``."""
    _require_spd(cov_prev, "cov_prev")
    if not noise_var > 0:
        raise ValueError(f"noise_var must be > 0, got {noise_var}")
    z = np.asarray(z, dtype=float).reshape(2)
    quad = float(z @ np.asarray(cov_prev, dtype=float) @ z)
    return 0.5 * math.log1p(quad / noise_var) / math.log(2.0)


def awgn_capacity(power, noise_var: float):
    """``0.5 log2(1 + P/W)``; accepts scalars or arrays of powers."""
    if not noise_var > 0:
        raise ValueError(f"noise_var must be > 0, got {noise_var}")
    p = np.asarray(power, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("power must be finite and >= 0")
    c = 0.5 * np.log1p(p / noise_var) / math.log(2.0)
    return float(c) if c.ndim == 0 else c


def capacity_bound_chain(powers: Sequence[float], noise_var: float) -> tuple[float, float]:
    """``(sum_t C(P_t), T * C(mean P_t))``; the first never exceeds the second."""
    p = np.asarray(powers, dtype=float)
    if p.size == 0:
        raise ValueError("need at least one per-step power")
    per_step = math.fsum(awgn_capacity(p, noise_var).reshape(-1))
    mean_power = math.fsum(p) / p.size
    return per_step, p.size * awgn_capacity(mean_power, noise_var)


def det_lower_bound(det_prior: float, cumulative_bits: float) -> float:
    """Lower bound ``det_prior * 2**(-2 L)`` on the expected posterior determinant."""
    if not det_prior > 0:
        raise ValueError(f"det_prior must be > 0, got {det_prior}")
    if cumulative_bits < 0:
        raise ValueError(f"cumulative information must be >= 0, got {cumulative_bits}")
    return det_prior * 2.0 ** (-2.0 * cumulative_bits)


def power_bound_from_cost(cost: float, q: float, noise_var: float) -> float:
    """Channel power ceiling ``(2/q) J + 2W`` implied by an excitation cost ``J``."""
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q}")
    if not noise_var > 0:
        raise ValueError(f"noise_var must be > 0, got {noise_var}")
    if cost < 0:
        raise ValueError(f"cost must be >= 0, got {cost}")
    return 2.0 / q * cost + 2.0 * noise_var


@dataclass(frozen=True, eq=False)
class UtilityLedger:
    """Per-step utilities of one run plus the log-determinants they telescope between."""

    steps: np.ndarray
    logdet_prior: float
    logdet_final: float

    @property
    def cumulative(self) -> float:
        return math.fsum(self.steps)

    @property
    def logdet_reduction(self) -> float:
        return 0.5 * (self.logdet_prior - self.logdet_final)

    @classmethod
    def from_covariances(cls, covs: Sequence) -> "UtilityLedger":
        steps = np.array([step_utility(p, n) for p, n in zip(covs[:-1], covs[1:])])
        return cls(steps, math.log2(det2(covs[0])), math.log2(det2(covs[-1])))


@dataclass(frozen=True, eq=False)
class BoundReport:
    powers: np.ndarray
    mean_power: float
    capacities: np.ndarray
    sum_stepwise_capacity: float
    aggregate_capacity: float
    cost_power_bound: float
    det_lower_bound: float

    @property
    def capacity_of_mean_power(self) -> float:
        return self.aggregate_capacity / len(self.powers)


def bound_report(powers: Sequence[float], noise_var: float, cost: float, q: float,
                 det_prior: float, cumulative_bits: float) -> BoundReport:
    p = np.asarray(powers, dtype=float)
    per_step, aggregate = capacity_bound_chain(p, noise_var)
    return BoundReport(
        powers=p,
        mean_power=math.fsum(p) / p.size,
        capacities=awgn_capacity(p, noise_var),
        sum_stepwise_capacity=per_step,
        aggregate_capacity=aggregate,
        cost_power_bound=power_bound_from_cost(cost, q, noise_var),
        # an empirical mean of log-det reductions can dip below zero only by rounding
        det_lower_bound=det_lower_bound(det_prior, max(cumulative_bits, 0.0)),
    )


# -- diagnostics -----------------------------------------------------------

MIN_DIAGNOSTIC_RUNS = 30


@dataclass(frozen=True)
class DiagnosticReport:
    """How far a policy is from producing independent, Gaussian channel statistics.

    ``None`` marks quantities that are undefined because the data has no variance.
    """

    autocorrelations: tuple[Optional[float], ...]
    band_half_width: float
    excess_kurtosis: tuple[Optional[float], ...]

    @property
    def lags(self) -> tuple[int, ...]:
        return tuple(range(1, len(self.autocorrelations) + 1))

    def inside_band(self) -> tuple[Optional[bool], ...]:
        return tuple(None if r is None else abs(r) <= self.band_half_width
                     for r in self.autocorrelations)


def _pooled_autocorrelation(x: np.ndarray, max_lag: int) -> tuple[Optional[float], ...]:
    centered = x - x.mean()
    denom = float(np.sum(centered * centered))
    if denom == 0.0 or not math.isfinite(denom):
        return (None,) * max_lag
    out = []
    for k in range(1, max_lag + 1):
        num = float(np.sum(centered[:, k:] * centered[:, :-k]))
        out.append(num / denom)
    return tuple(out)


def _slice_excess_kurtosis(y: np.ndarray) -> tuple[Optional[float], ...]:
    out = []
    for col in y.T:
        c = col - col.mean()
        m2 = float(np.mean(c * c))
        if m2 == 0.0:
            out.append(None)
            continue
        out.append(float(np.mean(c ** 4)) / (m2 * m2) - 3.0)
    return tuple(out)


def independence_diagnostics(state_samples, channel_samples, max_lag: int = 5) -> DiagnosticReport:
    """Autocorrelation of the state process and per-slice kurtosis of the channel input.

    Both inputs are ``(runs, horizon)`` arrays. Autocorrelations at lags
    ``1..max_lag`` are pooled across runs around the pooled mean; the 95% band
    ``1.96 / sqrt(runs * horizon)`` is the white-noise reference. Excess kurtosis
    is computed across runs at each time index.
    """
    x = np.asarray(state_samples, dtype=float)
    y = np.asarray(channel_samples, dtype=float)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("samples must be (runs, horizon) arrays")
    if x.shape[0] < MIN_DIAGNOSTIC_RUNS or y.shape[0] < MIN_DIAGNOSTIC_RUNS:
        raise ValueError(f"need at least {MIN_DIAGNOSTIC_RUNS} runs, "
                         f"got {x.shape[0]} state and {y.shape[0]} channel runs")
    if x.shape[1] <= max_lag:
        raise ValueError(f"horizon {x.shape[1]} too short for lag {max_lag}")
    return DiagnosticReport(
        autocorrelations=_pooled_autocorrelation(x, max_lag),
        band_half_width=Z95 / math.sqrt(x.size),
        excess_kurtosis=_slice_excess_kurtosis(y),
    )

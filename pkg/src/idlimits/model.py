"""Scalar linear system ``x_{t+1} = a x_t + b u_t + w_t`` under deterministic feedback.

This module is the readable reference path: one Python step at a time through
:func:`system_step` and :func:`policy_eval`. The fused simulate-and-estimate
loop used by the Monte Carlo engine lives in :mod:`idlimits.kernel` and is
tested against :func:`simulate_trajectory` bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from idlimits.errors import ConfigError
from idlimits.estimator import Belief, cholesky2
from idlimits.rng import standard_normals

DEFAULT_GUARD = 1e6

POLICY_KINDS = ("zero", "linear", "sin_modulated", "open_loop")


@dataclass(frozen=True)
class SystemSpec:
    a: float
    b: float
    noise_var: float
    x0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ConfigError("theta", "system coefficients must be finite")
        if not (math.isfinite(self.noise_var) and self.noise_var > 0):
            raise ConfigError("noise_var", f"must be > 0, got {self.noise_var}")
        if self.x0 != 0.0:
            raise ConfigError("x0", f"initial state is fixed at 0, got {self.x0}")

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.a, self.b])


@dataclass(frozen=True)
class PolicySpec:
    """Deterministic feedback rule.

    ``linear``: ``u = k x``; ``sin_modulated``: ``u = k x (1 + sin x)``;
    ``open_loop``: ``u = sequence[t]``; ``zero``: ``u = 0``.
    """

    kind: str
    gain: float = 0.0
    sequence: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError("policy.kind", f"unknown policy kind {self.kind!r}; "
                              f"expected one of {', '.join(POLICY_KINDS)}")
        if not math.isfinite(self.gain):
            raise ConfigError("policy.gain", "gain must be finite")
        seq = tuple(float(v) for v in self.sequence)
        if not all(math.isfinite(v) for v in seq):
            raise ConfigError("policy.sequence", "open-loop inputs must be finite")
        object.__setattr__(self, "sequence", seq)
        if self.kind == "open_loop" and not seq:
            raise ConfigError("policy.sequence", "open_loop policy needs a non-empty sequence")

    def check_horizon(self, horizon: int) -> None:
        if self.kind == "open_loop" and len(self.sequence) < horizon:
            raise ConfigError("policy.sequence", f"open-loop sequence has {len(self.sequence)} "
                              f"inputs but the horizon is {horizon}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Record of one rollout; arrays are indexed as in the dynamics.

    ``states`` holds x_0..x_n, ``inputs``/``noises`` hold u_0..u_{n-1} and
    w_0..w_{n-1}, and ``channel_inputs[t-1]`` holds ``y_t = z_{t-1} . theta``.
    When ``diverged`` is set, ``n`` counts up to and including the transition
    that crossed the guard.
    """

    theta: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    noises: np.ndarray
    channel_inputs: np.ndarray
    diverged: bool = False

    @property
    def horizon(self) -> int:
        return len(self.inputs)

    @property
    def regressors(self) -> np.ndarray:
        return np.column_stack([self.states[:-1], self.inputs])


def system_step(x: float, u: float, spec: SystemSpec, w: float) -> float:
    return spec.a * x + spec.b * u + w


def policy_eval(policy: PolicySpec, t: int, history: Sequence[float]) -> float:
    if len(history) != t + 1:
        raise ValueError(f"history must hold x_0..x_{t} ({t + 1} values), got {len(history)}")
    x = float(history[t])
    kind = policy.kind
    if kind == "linear":
        return policy.gain * x
    if kind == "sin_modulated":
        return policy.gain * x * (1.0 + math.sin(x))
    if kind == "open_loop":
        if t >= len(policy.sequence):
            raise ConfigError("policy.sequence",
                              f"open-loop sequence exhausted at t={t} (length {len(policy.sequence)})")
        return policy.sequence[t]
    return 0.0


def draw_noise_sequence(noise_var: float, horizon: int, stream: np.random.Generator) -> np.ndarray:
    """``horizon`` i.i.d. N(0, noise_var) samples."""
    if not (math.isfinite(noise_var) and noise_var > 0):
        raise ConfigError("noise_var", f"must be > 0, got {noise_var}")
    if horizon < 1:
        raise ConfigError("horizon", f"must be >= 1, got {horizon}")
    return math.sqrt(noise_var) * standard_normals(stream, horizon)


def sample_parameters(prior: Belief, stream: np.random.Generator) -> np.ndarray:
    """One draw of theta from ``N(prior.mean, prior.cov)`` via the Cholesky factor."""
    chol = cholesky2(prior.cov)
    n = standard_normals(stream, 2)
    return prior.mean + chol @ n


def simulate_trajectory(theta, policy: PolicySpec, horizon: int, noises: Sequence[float],
                        guard: float = DEFAULT_GUARD) -> Trajectory:
    if len(noises) != horizon:
        raise ValueError(f"need {horizon} noise samples, got {len(noises)}")
    policy.check_horizon(horizon)
    a, b = float(theta[0]), float(theta[1])
    states = [0.0]
    inputs: list[float] = []
    ys: list[float] = []
    diverged = False
    for t in range(horizon):
        x = states[t]
        u = policy_eval(policy, t, states)
        y = a * x + b * u
        x_next = y + float(noises[t])
        inputs.append(u)
        ys.append(y)
        states.append(x_next)
        if not abs(x_next) <= guard:
            diverged = True
            break
    n = len(inputs)
    return Trajectory(
        theta=np.array([a, b]),
        states=np.array(states),
        inputs=np.array(inputs),
        noises=np.array(noises[:n], dtype=float),
        channel_inputs=np.array(ys),
        diverged=diverged,
    )

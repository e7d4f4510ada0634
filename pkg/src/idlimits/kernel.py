"""Backend selection for the fused simulate-and-estimate rollout.

The compiled Cython kernel is used when importable; otherwise the pure-Python
one. Set ``IDLIMITS_PURE_PYTHON=1`` to force the fallback. Both backends take
the same arguments and write into caller-provided buffers; see
:func:`run_rollout` for the array-level wrapper.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from idlimits import _kernel_py

_POLICY_CODES = {"zero": 0, "linear": 1, "sin_modulated": 2, "open_loop": 3}

_compiled = None
if os.environ.get("IDLIMITS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from idlimits import _kernel as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def backends() -> dict:
    """Available rollout implementations by name."""
    out = {"python": _kernel_py.rollout}
    if _compiled is not None:
        out["cython"] = _compiled.rollout
    return out


@dataclass(frozen=True, eq=False)
class RolloutResult:
    states: np.ndarray
    inputs: np.ndarray
    channel_inputs: np.ndarray
    utilities: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    diverged: bool


def run_rollout(theta, policy, noises, noise_var, prior_mean, prior_cov,
                guard, backend: str | None = None) -> RolloutResult:
    """Simulate the closed loop and run the estimator along it in a single pass."""
    impl = backends()[backend or BACKEND]
    noises = np.ascontiguousarray(noises, dtype=np.float64)
    T = noises.shape[0]
    seq = np.ascontiguousarray(policy.sequence, dtype=np.float64)
    x = np.empty(T + 1)
    u = np.empty(T)
    y = np.empty(T)
    F = np.empty(T)
    n, m, diverged, m0, m1, p00, p01, p11 = impl(
        float(theta[0]), float(theta[1]), _POLICY_CODES[policy.kind], float(policy.gain),
        seq, noises, float(guard), float(noise_var),
        float(prior_mean[0]), float(prior_mean[1]),
        float(prior_cov[0][0]), float(prior_cov[0][1]), float(prior_cov[1][1]),
        x, u, y, F)
    return RolloutResult(
        states=x[:n + 1], inputs=u[:n], channel_inputs=y[:n], utilities=F[:m],
        mean=np.array([m0, m1]), cov=np.array([[p00, p01], [p01, p11]]),
        diverged=bool(diverged))

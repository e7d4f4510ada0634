"""Regularized least-squares estimation of ``theta = [a, b]``.

The recursive form is a Kalman filter for the static-parameter sensor model
``x_{t+1} = z_t . theta + w_t`` with ``z_t = [x_t, u_t]``. The batch form solves
the normal equations of the prior-regularized least-squares problem directly and
serves as an independent oracle for the recursion.

All matrix work is explicit 2x2 arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-12


# -- 2x2 helpers -----------------------------------------------------------

def det2(m) -> float:
    return float(m[0][0] * m[1][1] - m[0][1] * m[1][0])


def inv2(m) -> np.ndarray:
    d = det2(m)
    if d == 0.0 or not math.isfinite(d):
        raise np.linalg.LinAlgError("singular 2x2 matrix")
    return np.array([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])


def eigvals2(m) -> tuple[float, float]:
    """Eigenvalues of a symmetric 2x2 matrix, ascending, from trace and determinant."""
    half_tr = 0.5 * (m[0][0] + m[1][1])
    half_diff = 0.5 * (m[0][0] - m[1][1])
    r = math.hypot(half_diff, m[0][1])
    return half_tr - r, half_tr + r


def symmetrize(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def is_spd(m) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2) or not np.all(np.isfinite(m)):
        return False
    if abs(m[0, 1] - m[1, 0]) > SYMMETRY_TOL * max(1.0, abs(m[0, 1])):
        return False
    return m[0, 0] > 0.0 and det2(m) > 0.0


def cholesky2(m) -> np.ndarray:
    """Lower-triangular factor ``L`` with ``L @ L.T == m``."""
    if not is_spd(m):
        raise ValueError("covariance must be symmetric positive definite")
    l00 = math.sqrt(m[0][0])
    l10 = m[0][1] / l00
    l11 = math.sqrt(m[1][1] - l10 * l10)
    return np.array([[l00, 0.0], [l10, l11]])


@dataclass(frozen=True, eq=False)
class Belief:
    """Gaussian belief over ``theta``: posterior mean, error covariance and step count."""

    mean: np.ndarray
    cov: np.ndarray
    step: int = 0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(mean)):
            raise ValueError("belief mean must be finite")
        if not is_spd(cov):
            raise ValueError("belief covariance must be symmetric positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def precision(self) -> np.ndarray:
        return inv2(self.cov)

    def __eq__(self, other):
        if not isinstance(other, Belief):
            return NotImplemented
        return (self.step == other.step and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.cov, other.cov))


def _check_noise_var(noise_var: float) -> None:
    if not (math.isfinite(noise_var) and noise_var > 0.0):
        raise ValueError(f"noise_var must be finite and > 0, got {noise_var}")


def rls_update(belief: Belief, z, x_next: float, noise_var: float) -> Belief:
    """One recursive least-squares step with regressor ``z`` and observation ``x_next``.

    ``cov' = cov - g g^T / s`` and ``mean' = mean + g (x_next - z.mean) / s`` where
    ``g = cov z`` and ``s = W + z^T cov z``.
    """
    _check_noise_var(noise_var)
    z0, z1 = float(z[0]), float(z[1])
    x_next = float(x_next)
    if not (math.isfinite(z0) and math.isfinite(z1) and math.isfinite(x_next)):
        raise ValueError("regressor and observation must be finite")
    p = belief.cov
    p00, p01, p11 = float(p[0, 0]), float(p[0, 1]), float(p[1, 1])
    m0, m1 = float(belief.mean[0]), float(belief.mean[1])
    # same operation order as the rollout kernels, so results agree bit for bit
    g0 = p00 * z0 + p01 * z1
    g1 = p01 * z0 + p11 * z1
    s = noise_var + (z0 * g0 + z1 * g1)
    innov = x_next - (z0 * m0 + z1 * m1)
    m0 = m0 + g0 * innov / s
    m1 = m1 + g1 * innov / s
    p00 = p00 - g0 * g0 / s
    p01 = p01 - g0 * g1 / s
    p11 = p11 - g1 * g1 / s
    return Belief(np.array([m0, m1]), np.array([[p00, p01], [p01, p11]]), belief.step + 1)


def information_matrix(prior: Belief, regressors: Sequence, noise_var: float) -> np.ndarray:
    """Posterior precision ``inv(cov_0) + sum_i z_i z_i^T / W`` by direct accumulation."""
    _check_noise_var(noise_var)
    info = prior.precision.copy()
    for z in regressors:
        z = np.asarray(z, dtype=float).reshape(2)
        info += np.outer(z, z) / noise_var
    return info


def batch_regularized_lse(prior: Belief, regressors: Sequence, observations: Sequence,
                          noise_var: float) -> Belief:
    """Solve the regularized least-squares normal equations in one shot.

    ``observations[i]`` is the state reached from ``regressors[i]``.
    """
    if len(regressors) != len(observations):
        raise ValueError(
            f"length mismatch: {len(regressors)} regressors vs {len(observations)} observations")
    info = information_matrix(prior, regressors, noise_var)
    rhs = prior.precision @ prior.mean
    for z, x in zip(regressors, observations):
        rhs = rhs + np.asarray(z, dtype=float).reshape(2) * (float(x) / noise_var)
    cov = symmetrize(inv2(info))
    return Belief(cov @ rhs, cov, prior.step + len(regressors))


def chain_rls(prior: Belief, regressors: Sequence, observations: Sequence,
              noise_var: float) -> list[Belief]:
    """Beliefs ``[prior, b_1, ..., b_t]`` from successive :func:`rls_update` calls."""
    if len(regressors) != len(observations):
        raise ValueError("length mismatch between regressors and observations")
    out = [prior]
    for z, x in zip(regressors, observations):
        out.append(rls_update(out[-1], z, x, noise_var))
    return out

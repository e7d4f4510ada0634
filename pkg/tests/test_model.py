import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from idlimits.errors import ConfigError
from idlimits.estimator import Belief
from idlimits.model import (PolicySpec, SystemSpec, draw_noise_sequence, policy_eval,
                            sample_parameters, simulate_trajectory, system_step)
from idlimits.rng import derive_stream

SYS = SystemSpec(0.9, 1.0, 0.1)


@pytest.mark.parametrize("x, u, w, expected", [
    (0.0, 0.0, 0.0, 0.0),
    (1.0, -0.9, 0.0, 0.0),
    (1.0, 2.0, 0.5, 3.4),
])
def test_system_step(x, u, w, expected):
    assert system_step(x, u, SYS, w) == pytest.approx(expected, abs=1e-15)


def test_system_spec_validation():
    with pytest.raises(ConfigError, match="noise_var"):
        SystemSpec(0.9, 1.0, 0.0)
    with pytest.raises(ConfigError, match="x0"):
        SystemSpec(0.9, 1.0, 0.1, x0=1.0)


def test_policy_eval_examples():
    sm = PolicySpec("sin_modulated", -1.0)
    assert policy_eval(sm, 0, [math.pi / 2]) == pytest.approx(-math.pi)
    assert policy_eval(PolicySpec("sin_modulated", -1.37), 0, [0.0]) == 0.0
    assert policy_eval(PolicySpec("linear", -1.2), 0, [0.5]) == pytest.approx(-0.6)
    assert policy_eval(PolicySpec("zero"), 2, [1.0, 2.0, 3.0]) == 0.0
    assert policy_eval(PolicySpec("open_loop", sequence=[4.0, 5.0]), 1, [0.0, 1.0]) == 5.0


def test_policy_eval_open_loop_exhausted():
    with pytest.raises(ConfigError, match="policy.sequence"):
        policy_eval(PolicySpec("open_loop", sequence=[1.0]), 1, [0.0, 0.0])


def test_policy_eval_history_length_checked():
    with pytest.raises(ValueError):
        policy_eval(PolicySpec("linear", 1.0), 2, [0.0])


def test_unknown_policy_kind():
    with pytest.raises(ConfigError, match="policy.kind"):
        PolicySpec("bang_bang")


@given(st.sampled_from(["linear", "sin_modulated", "zero"]),
       st.floats(-3, 3), st.floats(-50, 50), st.integers(0, 5))
def test_policy_eval_referentially_transparent(kind, gain, x, t):
    p = PolicySpec(kind, gain)
    hist = [0.0] * t + [x]
    assert policy_eval(p, t, hist) == policy_eval(p, t, list(hist))


def test_noise_determinism():
    a = draw_noise_sequence(0.1, 5, derive_stream(9, 0))
    b = draw_noise_sequence(0.1, 5, derive_stream(9, 0))
    assert np.array_equal(a, b)


def test_noise_moments_large_sample():
    W, T = 0.1, 10**6
    w = draw_noise_sequence(W, T, derive_stream(77, 0))
    assert abs(w.mean()) < 4 * math.sqrt(W / T)
    assert abs(w.var() - W) < 0.05 * W


def test_noise_rejects_nonpositive_variance():
    with pytest.raises(ConfigError, match="noise_var"):
        draw_noise_sequence(0.0, 5, derive_stream(1))


def test_sample_parameters_determinism_and_moments():
    prior = Belief(np.zeros(2), np.eye(2))
    a = sample_parameters(prior, derive_stream(5, 3))
    b = sample_parameters(prior, derive_stream(5, 3))
    assert np.array_equal(a, b)
    stream = derive_stream(5, 99)
    draws = np.array([sample_parameters(prior, stream) for _ in range(100_000)])
    assert np.all(np.abs(np.cov(draws.T) - np.eye(2)) < 0.05)


def test_sample_parameters_uses_cholesky_factor():
    cov = np.array([[2.0, 0.6], [0.6, 0.5]])
    prior = Belief([1.0, -1.0], cov)
    stream = derive_stream(8)
    draws = np.array([sample_parameters(prior, stream) for _ in range(50_000)])
    assert np.all(np.abs(np.cov(draws.T) - cov) < 0.05)
    assert np.all(np.abs(draws.mean(axis=0) - [1.0, -1.0]) < 0.03)


def test_non_spd_prior_rejected():
    with pytest.raises(ValueError):
        Belief([0.9, 1.0], np.zeros((2, 2)))


def test_zero_noise_trajectory_stays_at_origin():
    tr = simulate_trajectory([0.9, 1.0], PolicySpec("sin_modulated", -1.2), 20, np.zeros(20))
    assert not tr.diverged
    assert np.all(tr.states == 0.0) and np.all(tr.channel_inputs == 0.0)


def test_hand_recursion():
    tr = simulate_trajectory([0.9, 1.0], PolicySpec("linear", -0.9), 2, [1.0, 0.0])
    assert tr.states.tolist() == [0.0, 1.0, 0.0]
    assert tr.inputs.tolist() == [0.0, -0.9]
    assert tr.channel_inputs[0] == 0.0
    assert tr.channel_inputs[1] == pytest.approx(tr.states[2] - tr.noises[1], abs=1e-15)


def test_unstable_gain_diverges():
    T = 500
    noises = np.zeros(T)
    noises[0] = 1.0
    tr = simulate_trajectory([0.9, 1.0], PolicySpec("linear", 2.0), T, noises, guard=1e6)
    assert tr.diverged
    assert abs(tr.states[-1]) > 1e6
    assert tr.horizon < T
    # |a + bk| = 2.9: crossing 1e6 from 1 takes ceil(log(1e6)/log(2.9)) more steps
    assert tr.horizon == 1 + math.ceil(math.log(1e6) / math.log(2.9))


def test_zero_policy_first_regressor_zero():
    tr = simulate_trajectory([0.9, 1.0], PolicySpec("zero"), 3, [0.3, -0.1, 0.2])
    assert tr.regressors[0].tolist() == [0.0, 0.0]


@given(st.floats(-1.6, -0.3), st.integers(0, 10_000))
def test_trajectory_identities(gain, seed):
    T = 60
    w = draw_noise_sequence(0.1, T, derive_stream(seed))
    tr = simulate_trajectory([0.9, 1.0], PolicySpec("sin_modulated", gain), T, w)
    if tr.diverged:
        return
    x, u = tr.states, tr.inputs
    assert np.all(np.abs(x[1:] - (0.9 * x[:-1] + 1.0 * u + w)) <= 1e-12)
    assert np.all(np.abs(tr.channel_inputs - (x[1:] - w)) <= 1e-12)
    assert np.allclose(tr.channel_inputs, tr.regressors @ np.array([0.9, 1.0]), rtol=0, atol=1e-15)


def test_noise_length_mismatch():
    with pytest.raises(ValueError):
        simulate_trajectory([0.9, 1.0], PolicySpec("zero"), 3, [0.0])

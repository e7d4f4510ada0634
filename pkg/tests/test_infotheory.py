import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from idlimits.estimator import Belief, det2, rls_update
from idlimits.infotheory import (UtilityLedger, awgn_capacity, capacity_bound_chain,
                                 det_lower_bound, independence_diagnostics,
                                 power_bound_from_cost, step_utility, step_utility_closed_form)
from idlimits.model import PolicySpec, draw_noise_sequence, simulate_trajectory
from idlimits.rng import derive_stream, standard_normals

HALF_LOG2_11 = 0.5 * math.log2(11)


def test_step_utility_examples():
    p = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert step_utility(p, p) == 0.0
    assert step_utility(np.eye(2), [[1 / 11, 0], [0, 1]]) == pytest.approx(HALF_LOG2_11, rel=1e-14)
    assert HALF_LOG2_11 == pytest.approx(1.7297158, abs=1e-7)


def test_step_utility_rejects_non_spd():
    with pytest.raises(ValueError):
        step_utility(np.eye(2), [[1.0, 2.0], [2.0, 1.0]])


def test_closed_form_examples():
    assert step_utility_closed_form(np.eye(2), [0.0, 0.0], 0.1) == 0.0
    assert step_utility_closed_form(np.eye(2), [1.0, 0.0], 0.1) == pytest.approx(HALF_LOG2_11,
                                                                                 rel=1e-14)


def test_closed_form_matches_det_ratio_on_random_updates():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        L = np.tril(rng.normal(size=(2, 2)))
        L[np.diag_indices(2)] = np.abs(L[np.diag_indices(2)]) + 0.1
        cov = L @ L.T
        z = rng.normal(size=2) * 2
        W = rng.uniform(0.01, 2.0)
        post = rls_update(Belief([0, 0], cov), z, rng.normal(), W)
        f = step_utility(cov, post.cov)
        assert f >= 0
        assert abs(f - step_utility_closed_form(cov, z, W)) <= 1e-10


@pytest.mark.parametrize("P, W, expected", [(0.0, 0.1, 0.0), (0.3, 0.1, 1.0), (0.1, 0.1, 0.5)])
def test_awgn_capacity_examples(P, W, expected):
    assert awgn_capacity(P, W) == pytest.approx(expected, abs=1e-15)


def test_awgn_capacity_rejects_bad_inputs():
    with pytest.raises(ValueError):
        awgn_capacity(-0.1, 0.1)
    with pytest.raises(ValueError):
        awgn_capacity(0.1, 0.0)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(1e-3, 10))
def test_capacity_monotone_and_concave(p1, p2, W):
    lo, hi = sorted((p1, p2))
    assert awgn_capacity(lo, W) <= awgn_capacity(hi, W)
    mid = awgn_capacity(0.5 * (p1 + p2), W)
    assert mid >= 0.5 * (awgn_capacity(p1, W) + awgn_capacity(p2, W)) - 1e-12


def test_capacity_chain_examples():
    s, agg = capacity_bound_chain([0.1, 0.3], 0.1)
    assert s == pytest.approx(1.5, abs=1e-15)
    assert agg == pytest.approx(math.log2(3), abs=1e-15)
    s, agg = capacity_bound_chain([0.2] * 7, 0.1)
    assert s == pytest.approx(agg, rel=1e-14)
    assert agg == pytest.approx(7 * awgn_capacity(0.2, 0.1), rel=1e-14)


def test_capacity_chain_empty_rejected():
    with pytest.raises(ValueError):
        capacity_bound_chain([], 0.1)


@given(st.lists(st.floats(0, 100), min_size=1, max_size=50), st.floats(1e-2, 5))
def test_capacity_chain_jensen(powers, W):
    s, agg = capacity_bound_chain(powers, W)
    assert s <= agg + 1e-10


def test_det_lower_bound_examples():
    assert det_lower_bound(1.0, 0.0) == 1.0
    assert det_lower_bound(1.0, 1.0) == 0.25


def test_power_bound_examples():
    assert power_bound_from_cost(0.0, 1.0, 0.1) == pytest.approx(0.2)
    assert power_bound_from_cost(2.0, 1.0, 0.1) == pytest.approx(4.2)
    with pytest.raises(ValueError):
        power_bound_from_cost(1.0, 0.0, 0.1)


def test_ledger_from_covariances_telescopes():
    rng = np.random.default_rng(8)
    b = Belief([0, 0], np.eye(2))
    covs = [b.cov]
    for _ in range(200):
        b = rls_update(b, rng.normal(size=2), rng.normal(), 0.1)
        covs.append(b.cov)
    led = UtilityLedger.from_covariances(covs)
    assert np.all(led.steps >= 0)
    assert abs(led.cumulative - led.logdet_reduction) <= 1e-10
    assert led.logdet_reduction == pytest.approx(
        0.5 * math.log2(det2(covs[0]) / det2(covs[-1])), rel=1e-10)


# -- diagnostics -----------------------------------------------------------

def test_white_noise_inside_band():
    z = standard_normals(derive_stream(101), 100 * 200).reshape(100, 200)
    rep = independence_diagnostics(z, z)
    assert all(rep.inside_band())
    assert rep.band_half_width == pytest.approx(1.959963984540054 / math.sqrt(z.size))
    k = np.array(rep.excess_kurtosis)
    assert abs(k.mean()) < 0.1


def test_constant_sequences_report_undefined():
    x = np.ones((40, 20))
    rep = independence_diagnostics(x, x)
    assert rep.autocorrelations == (None,) * 5
    assert rep.inside_band() == (None,) * 5
    assert set(rep.excess_kurtosis) == {None}


def test_too_few_runs_rejected():
    with pytest.raises(ValueError, match="at least 30"):
        independence_diagnostics(np.zeros((10, 20)), np.zeros((10, 20)))


def _closed_loop_states(policy, runs=60, T=300, seed=0):
    xs, ys = [], []
    for i in range(runs):
        w = draw_noise_sequence(0.1, T, derive_stream(seed, i))
        tr = simulate_trajectory([0.9, 1.0], policy, T, w)
        xs.append(tr.states[1:])
        ys.append(tr.channel_inputs)
    return np.array(xs), np.array(ys)


def test_stable_linear_policy_state_is_correlated():
    x, y = _closed_loop_states(PolicySpec("linear", -1.2))
    rep = independence_diagnostics(x, y)
    # closed loop x_{t+1} = (a + b k) x_t + w_t with a + b k = -0.3
    assert not rep.inside_band()[0]
    assert rep.autocorrelations[0] == pytest.approx(-0.3, abs=0.03)


def test_deadbeat_linear_policy_gives_white_state():
    # a + b k = 0.9 - 0.9 = 0 makes the state equal to the previous noise sample
    x, y = _closed_loop_states(PolicySpec("linear", -0.9))
    rep = independence_diagnostics(x, y)
    assert abs(rep.autocorrelations[0]) < 2 * rep.band_half_width

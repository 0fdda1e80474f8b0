import math

import numpy as np
import pytest

from hawkestail.deviations import rate, theta_star
from hawkestail.importance import (TiltedEstimate, is_tail, is_tail_adaptive, is_weights,
                                   residual_sum, tilt_gamma)
from hawkestail.kernel import ExponentialKernel, PowerLawKernel
from hawkestail.simulator import EventPath, HawkesModel, event_counts, mc_tail

from oracles import RESIDUAL_EXP12_EVENTS_1_2_T3

EXP = ExponentialKernel(1.0, 2.0)
POW = PowerLawKernel(1.0, 3.0)
EXPM, POWM = HawkesModel(1.0, EXP), HawkesModel(1.0, POW)


def test_tilt_gamma():
    assert tilt_gamma(2.0, 1.0, 0.5) == 1.0
    assert tilt_gamma(4.0, 1.0, 0.5) == pytest.approx(4 / 3)
    assert tilt_gamma(5.0, 1.0, 0.5) == pytest.approx(10 / 7)
    with pytest.raises(ValueError):
        tilt_gamma(0.0, 1.0, 0.5)
    for x in (3.0, 4.0, 7.0):
        g = tilt_gamma(x, 1.0, 0.5)
        assert g * 1.0 / (1 - g * 0.5) == pytest.approx(x)
        # theta* = log gamma - (gamma - 1) ||h||
        assert theta_star(x, 1.0, 0.5) == pytest.approx(math.log(g) - (g - 1) * 0.5)


def test_residual_sum():
    assert residual_sum(EventPath(3.0, np.empty(0)), EXP, 3.0) == 0.0
    for k in (EXP, POW):
        assert residual_sum(EventPath(3.0, np.array([3.0])), k, 3.0) == pytest.approx(0.5)
    got = residual_sum(EventPath(3.0, np.array([1.0, 2.0])), EXP, 3.0)
    assert got == pytest.approx(RESIDUAL_EXP12_EVENTS_1_2_T3, rel=1e-14)
    assert got == pytest.approx(0.5 * (math.exp(-2) + math.exp(-4)), rel=1e-14)


def test_weights_are_bounded_and_vanish_below_level():
    w = is_weights(EXPM, 10.0, 4.0, 5000, seed=1)
    assert np.all(w >= 0) and np.all(w <= 1.0)
    counts = event_counts(EXPM.tilted(4 / 3), 10.0, 5000, seed=1)
    np.testing.assert_array_equal(w == 0, counts < 40)


def test_tilted_simulator_runs_at_level_x():
    counts = event_counts(EXPM.tilted(tilt_gamma(4.0, 1.0, 0.5)), 50.0, 4000, seed=2)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    # finite-horizon mean is x t minus a start-up deficit of O(1)
    assert abs(counts.mean() / 50.0 - 4.0) < 0.05 + 4 * se / 50.0


def test_estimate_fields_and_determinism():
    a = is_tail(EXPM, 10.0, 4.0, 3000, seed=5)
    b = is_tail(EXPM, 10.0, 4.0, 3000, seed=5, n_jobs=3)
    assert isinstance(a, TiltedEstimate)
    assert a == b
    assert a.gamma == pytest.approx(4 / 3) and a.n_paths == 3000
    assert a.estimate <= math.exp(-10.0 * rate(4.0, 1.0, 0.5))
    lo, hi = a.interval()
    assert lo <= a.estimate <= hi


def test_is_tail_input_validation():
    with pytest.raises(ValueError):
        is_tail(EXPM, 10.0, 1.5, 100, seed=1)
    with pytest.raises(ValueError):
        is_tail(EXPM, 10.0, 4.0, 0, seed=1)


@pytest.mark.parametrize("model", [EXPM, POWM])
def test_is_agrees_with_naive_at_desk_scale(model):
    t, x, n = 5.0, 3.5, 60000
    est = is_tail(model, t, x, n, seed=3)
    p, se = mc_tail(model, t, x, n, seed=4)
    assert abs(est.estimate - p) < 3 * math.hypot(est.std_error, se)


def test_variance_reduction():
    t, x, n = 10.0, 4.0, 40000
    est = is_tail(EXPM, t, x, n, seed=6)
    _, se = mc_tail(EXPM, t, x, n, seed=7)
    assert est.std_error < se


def test_adaptive_reaches_target():
    est = is_tail_adaptive(EXPM, 10.0, 4.0, rel_tol=0.01, seed=8, n_start=2000)
    assert est.rel_error <= 0.01
    assert est.n_paths >= 2000

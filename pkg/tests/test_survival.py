import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from tippingpoint.survival import (ConvergenceError, EstimationError, Family, ParametricFit,
                                   cox_fit, cox_partial_loglik, cumhaz_eval, fit_exponential,
                                   fit_weibull, hazard_eval, km_fit, reverse_km,
                                   sample_conditional_event_time, survival_eval,
                                   weibull_loglik)

from conftest import make_dataset
from oracles import cox_loglik_oracle, golden_max, km_oracle, weibull_sample

LAM = math.log(2) / 8


# --------------------------------------------------------------------------
# Kaplan-Meier
# --------------------------------------------------------------------------

def test_km_hand_case():
    curve = km_fit([1.0, 2.0, 3.0], [True, False, True])
    np.testing.assert_array_equal(curve.times, [1.0, 3.0])
    assert curve.survival[0] == pytest.approx(2 / 3, abs=1e-15)
    assert curve.survival[1] == 0.0
    assert curve(0.5) == 1.0 and curve(1.0) == pytest.approx(2 / 3)


def test_km_all_censored():
    curve = km_fit([1.0, 2.0], [False, False])
    assert curve.times.size == 0
    assert curve([0.0, 5.0]).tolist() == [1.0, 1.0]


def test_km_empty_rejected():
    with pytest.raises(ValueError, match="empty"):
        km_fit(np.array([]), np.array([], dtype=bool))


def test_km_greenwood_single_step():
    # One death among 4: var = S^2 * d / (n (n - d)).
    curve = km_fit([1.0, 2.0, 2.0, 2.0], [True, False, False, False])
    assert curve.se[0] == pytest.approx(0.75 * math.sqrt(1 / 12))


records = st.lists(
    st.tuples(st.one_of(st.integers(0, 6).map(float),
                        st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False)),
              st.booleans()),
    min_size=1, max_size=25)


@settings(max_examples=200, deadline=None)
@given(records)
def test_km_matches_risk_set_enumeration(recs):
    time = [t for t, _ in recs]
    event = [e for _, e in recs]
    curve = km_fit(time, event)
    times, surv = km_oracle(time, event)
    assert curve.times.tolist() == times
    assert curve.survival.tolist() == surv


def test_reverse_km_hand_case():
    curve = reverse_km([1.0, 2.0], [True, False])
    np.testing.assert_array_equal(curve.times, [2.0])
    np.testing.assert_array_equal(curve.survival, [0.0])


def test_reverse_km_all_events():
    curve = reverse_km([1.0, 2.0, 3.0], [True, True, True])
    assert curve([0.0, 10.0]).tolist() == [1.0, 1.0]


def test_reverse_km_is_role_swap():
    rng = np.random.default_rng(1)
    t = rng.exponential(size=40).round(2)
    e = rng.random(40) < 0.6
    a, b = reverse_km(t, e), km_fit(t, ~e)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.survival, b.survival)


# --------------------------------------------------------------------------
# Parametric fits
# --------------------------------------------------------------------------

def test_exponential_closed_form():
    assert fit_exponential([1.0, 2.0, 3.0], [True] * 3).rate == 0.5
    assert fit_exponential([2.0, 2.0], [True, False]).rate == 0.25


def test_exponential_errors():
    with pytest.raises(EstimationError, match="zero"):
        fit_exponential([0.0, 0.0], [True, False])
    with pytest.raises(EstimationError, match="no events"):
        fit_exponential([1.0, 2.0], [False, False])


def test_exponential_matches_numerical_maximiser():
    rng = np.random.default_rng(2)
    t = rng.exponential(1 / 0.3, 50)
    c = rng.exponential(1 / 0.13, 50)
    time, event = np.minimum(t, c), t <= c
    fit = fit_exponential(time, event)
    assert abs(fit.rate - 0.3) < 3 * fit.rate_se
    ll = lambda lam: event.sum() * math.log(lam) - lam * time.sum()
    assert golden_max(ll, 1e-3, 5.0, tol=1e-12) == pytest.approx(fit.rate, abs=1e-8)


def test_exponential_time_scaling():
    rng = np.random.default_rng(3)
    t = rng.exponential(2.0, 30)
    e = rng.random(30) < 0.7
    base = fit_exponential(t, e).rate
    assert fit_exponential(2 * t, e).rate == base / 2
    assert fit_exponential(3.7 * t, e).rate == pytest.approx(base / 3.7, rel=1e-14)


def test_weibull_nesting():
    rng = np.random.default_rng(4)
    t = rng.exponential(1 / 0.2, 300)
    c = rng.exponential(1 / 0.05, 300)
    time, event = np.minimum(t, c), t <= c
    w = fit_weibull(time, event)
    assert abs(w.shape - 1.0) < 3 * w.shape_se
    assert w.loglik >= fit_exponential(time, event).loglik


def test_weibull_recovers_shape():
    rng = np.random.default_rng(5)
    t = weibull_sample(rng, 500, 0.6, LAM)
    w = fit_weibull(t, np.ones(500, dtype=bool))
    assert abs(w.shape - 0.6) < 3 * w.shape_se


def test_weibull_loglik_consistent():
    rng = np.random.default_rng(6)
    t = weibull_sample(rng, 200, 1.5, LAM)
    e = rng.random(200) < 0.8
    w = fit_weibull(t, e)
    assert weibull_loglik(w.shape, w.rate, t, e) == pytest.approx(w.loglik, rel=1e-12)


@pytest.mark.parametrize("shape,seed", [(0.6, 7), (1.0, 8), (1.5, 9), (3.0, 10)])
def test_weibull_gradient_vanishes(shape, seed):
    rng = np.random.default_rng(seed)
    t = weibull_sample(rng, 400, shape, LAM)
    c = rng.uniform(0, 3 * np.median(t), 400)
    time, event = np.minimum(t, c), t <= c
    w = fit_weibull(time, event)
    # Central differences in (log shape, log rate), step 1e-5.
    f = lambda a, b: weibull_loglik(math.exp(a), math.exp(b), time, event)
    a, b, h = math.log(w.shape), math.log(w.rate), 1e-5
    grad = ((f(a + h, b) - f(a - h, b)) / (2 * h), (f(a, b + h) - f(a, b - h)) / (2 * h))
    assert math.hypot(*grad) < 1e-6


def test_weibull_needs_two_event_times():
    with pytest.raises(EstimationError):
        fit_weibull([1.0, 1.0, 2.0], [True, True, False])


def test_weibull_iteration_limit():
    rng = np.random.default_rng(11)
    t = weibull_sample(rng, 100, 0.6, LAM)
    with pytest.raises(ConvergenceError) as info:
        fit_weibull(t, np.ones(100, dtype=bool), max_iter=1)
    assert info.value.last is not None


def test_survival_functions():
    expo = ParametricFit(Family.EXPONENTIAL, 1.0, 0.5, 0.0, 1)
    assert survival_eval(expo, 2.0) == pytest.approx(math.exp(-1))
    weib = ParametricFit(Family.WEIBULL, 0.6, LAM, 0.0, 1)
    for fit in (expo, weib):
        assert survival_eval(fit, 0.0) == 1.0 and cumhaz_eval(fit, 0.0) == 0.0
    t = np.random.default_rng(12).uniform(0, 40, 100)
    np.testing.assert_allclose(cumhaz_eval(weib, t) + np.log(survival_eval(weib, t)), 0,
                               atol=1e-15)
    assert hazard_eval(weib, 2.0) == pytest.approx(0.6 * LAM * 2.0 ** -0.4)
    with pytest.raises(ValueError):
        survival_eval(weib, -1.0)


# --------------------------------------------------------------------------
# Cox
# --------------------------------------------------------------------------

def test_cox_matches_golden_section(six_subjects):
    d = six_subjects
    f = lambda b: cox_loglik_oracle(b, d.time, d.event, d.arm)
    beta_hat = golden_max(f, -10, 10, tol=1e-12)
    assert cox_fit(d).log_hr == pytest.approx(beta_hat, abs=1e-6)
    assert cox_partial_loglik(0.3, d) == pytest.approx(f(0.3), abs=1e-12)


def test_cox_arm_symmetry():
    rng = np.random.default_rng(13)
    n = 80
    arm = rng.integers(0, 2, n)
    time = rng.exponential(1.0, n).round(1) + 0.1
    event = rng.random(n) < 0.7
    a = cox_fit(make_dataset(arm, time, event))
    b = cox_fit(make_dataset(1 - arm, time, event))
    assert b.log_hr == pytest.approx(-a.log_hr, abs=1e-12)
    assert b.se == pytest.approx(a.se, rel=1e-9)


def test_cox_efron_ties_by_hand():
    # One tied pair (one per arm) at t=1 among 4 subjects, then a control event.
    d = make_dataset([1, 0, 1, 0], [1.0, 1.0, 2.0, 3.0], [True, True, False, True])
    b = 0.4
    w = math.exp(b)
    ll = b - math.log(2 + 2 * w) - math.log(2 + 2 * w - 0.5 * (w + 1)) - math.log(1.0)
    assert cox_partial_loglik(b, d) == pytest.approx(ll, abs=1e-12)


def test_cox_time_scaling_invariance(six_subjects):
    d = six_subjects
    scaled = make_dataset(d.arm, d.time * 7.5, d.event)
    assert cox_fit(scaled).log_hr == pytest.approx(cox_fit(d).log_hr, abs=1e-12)


def test_cox_errors():
    with pytest.raises(ValueError, match="both arms"):
        cox_fit(make_dataset([0, 0], [1.0, 2.0], [True, True]))
    with pytest.raises(EstimationError, match="no events"):
        cox_fit(make_dataset([0, 1], [1.0, 2.0], [False, False]))
    # Every experimental subject outlives every control subject: monotone likelihood.
    with pytest.raises(EstimationError, match="non-finite MLE"):
        cox_fit(make_dataset([0, 0, 1, 1], [1.0, 2.0, 3.0, 4.0], [True, True, False, False]))


# --------------------------------------------------------------------------
# Conditional sampling
# --------------------------------------------------------------------------

def test_sampler_closed_form():
    expo = ParametricFit(Family.EXPONENTIAL, 1.0, 0.5, 0.0, 1)
    assert sample_conditional_event_time(expo, 2.0, 1.0, math.exp(-1)) == pytest.approx(4.0)


def test_sampler_boundary_and_range():
    weib = ParametricFit(Family.WEIBULL, 1.5, LAM, 0.0, 1)
    c = np.array([0.0, 0.5, 3.0])
    t = sample_conditional_event_time(weib, c, 2.0, 1 - 1e-15)
    assert np.all(t > c) and np.all(t - c < 1e-6)
    assert np.all(sample_conditional_event_time(weib, c, 1e9, 0.3) > c)
    with pytest.raises(ValueError):
        sample_conditional_event_time(weib, 1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        sample_conditional_event_time(weib, 1.0, 1.0, 1.0)


def test_sampler_distribution():
    weib = ParametricFit(Family.WEIBULL, 0.6, LAM, 0.0, 1)
    c, delta, n = 2.0, 0.7, 100_000
    u = np.random.default_rng(14).random(n)
    u = u[u > 0]
    t = np.sort(sample_conditional_event_time(weib, c, delta, u))
    G = lambda x: np.exp(-delta * (cumhaz_eval(weib, x) - cumhaz_eval(weib, c)))
    band = stats.kstwo.ppf(0.99, t.size)
    qs = np.quantile(t, np.linspace(0.025, 0.975, 20))
    ecdf = np.searchsorted(t, qs, side="right") / t.size
    assert np.max(np.abs(ecdf - (1 - G(qs)))) < band

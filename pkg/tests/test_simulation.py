import math

import numpy as np
import pytest
from scipy import stats

from tippingpoint.analysis import Criterion
from tippingpoint.imputation import Arm, ImputationSpec, Method, SelectionCriteria
from tippingpoint.simulation import (SCENARIOS, LAMBDA, Scenario, SimulationConfig,
                                     TippingDistribution, run_tipping_experiment,
                                     scenario_config, simulate_trial, stress_magnitude,
                                     summarize_scenario, target_arm_for)
from tippingpoint.survival import cox_fit


def test_scenario_table():
    assert len(SCENARIOS) == 20
    assert SCENARIOS[1] == (Scenario.CONTROL_HEAVY, 0.6, 0.7)
    assert SCENARIOS[9] == (Scenario.CONTROL_HEAVY, 1.5, 1.0)
    assert SCENARIOS[11] == (Scenario.EXPERIMENTAL_HEAVY, 0.6, 0.7)
    assert SCENARIOS[16] == (Scenario.EXPERIMENTAL_HEAVY, 1.5, 0.7)
    with pytest.raises(ValueError):
        SimulationConfig(n=3)


def test_allocation_and_bounds():
    for number in (1, 16):
        d = simulate_trial(scenario_config(number, n=600), trial=4)
        assert (d.arm == 0).sum() == (d.arm == 1).sum() == 300
        assert d.time.max() <= 15.0
        admin = ~d.event & ~d.dropout
        assert np.all(d.time[admin] == 15.0)


def test_trial_reproducible():
    cfg = scenario_config(3, n=200, seed=17)
    assert simulate_trial(cfg, 5) == simulate_trial(cfg, 5)
    assert simulate_trial(cfg, 5) != simulate_trial(cfg, 6)


def test_event_time_inverse_transform():
    cfg = SimulationConfig(true_hr=0.7, gamma=1.5, n=100_000, covariate_log_hr=0.0,
                           censoring_scale=0.0, t_max=1e6)
    d = simulate_trial(cfg)
    assert d.event.all()
    band = stats.kstwo.ppf(0.99, 50_000)
    for arm, linpred in ((0, 0.0), (1, math.log(0.7))):
        t = np.sort(d.time[d.arm == arm])
        qs = np.quantile(t, np.linspace(0.025, 0.975, 20))
        ecdf = np.searchsorted(t, qs, side="right") / t.size
        cdf = 1 - np.exp(-LAMBDA * qs ** 1.5 * math.exp(linpred))
        assert np.max(np.abs(ecdf - cdf)) < band


def test_noninformative_recovers_true_hr():
    cfg = SimulationConfig(true_hr=0.7, gamma=0.6, covariate_log_hr=0.0, censoring_scale=0.0,
                           n_trials=20, seed=3)
    logs = [cox_fit(simulate_trial(cfg, i)).log_hr for i in range(cfg.n_trials)]
    se = np.std(logs, ddof=1) / math.sqrt(len(logs))
    assert abs(np.mean(logs) - math.log(0.7)) < 3 * se


def test_null_calibration_summary():
    cfg = SimulationConfig(true_hr=1.0, gamma=1.5, censoring_scale=0.0, n_trials=100, seed=8)
    s = summarize_scenario(cfg)
    assert abs(s.mean_obs_hr - 1.0) <= 0.02
    assert s.dropout_ctr_pct == 0.0 and s.n_failed == 0


def test_single_trial_summary():
    cfg = scenario_config(2, n=500, n_trials=1, seed=4)
    s = summarize_scenario(cfg)
    d = simulate_trial(cfg, 0)
    est = cox_fit(d)
    assert s.mean_obs_hr == pytest.approx(est.hr, rel=1e-15)
    assert s.signif_pct == (100.0 if est.ci_high < 1 else 0.0)
    assert s.dropout_ctr_pct == 100 * d.dropout_rate(0)


def test_summary_workers_identical():
    cfg = scenario_config(11, n=400, n_trials=4, seed=1)
    assert summarize_scenario(cfg, workers=1) == summarize_scenario(cfg, workers=2)


def test_dropout_direction():
    for number, heavier in ((1, 0), (16, 1)):
        s = summarize_scenario(scenario_config(number, n_trials=3))
        rates = (s.dropout_ctr_pct, s.dropout_exp_pct)
        assert rates[heavier] > rates[1 - heavier]


def test_tipping_distribution_stats():
    dist = TippingDistribution(Method.MODEL_WEIBULL, (0.8, 0.5, None, 0.9), 1)
    np.testing.assert_allclose(dist.magnitudes[[0, 1, 3]], [0.2, 0.5, 0.1])
    assert dist.magnitudes[2] == math.inf and dist.never_tipped == 1
    assert dist.median_magnitude == pytest.approx(0.35)
    assert stress_magnitude(Method.DETERMINISTIC, 0.25) == 0.25
    assert stress_magnitude(Method.MODEL_EXPONENTIAL, 1.3) == pytest.approx(0.3)


def test_nonsignificant_trials_tip_immediately():
    cfg = scenario_config(5, n=400, n_trials=3, seed=2)   # true HR 1.1
    assert target_arm_for(cfg.scenario) is Arm.CONTROL
    spec = ImputationSpec(Method.DETERMINISTIC, SelectionCriteria(Arm.CONTROL), 0.0, 5)
    dist = run_tipping_experiment(cfg, spec, [0.0, 0.5, 1.0], criterion=Criterion.UPPER_CI)
    assert dist.values == (0.0, 0.0, 0.0) and dist.already_tipped == 3

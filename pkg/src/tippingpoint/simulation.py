"""Simulated two-arm trials with informative dropout.

Event times follow a Weibull proportional-hazards model in arm and a
standard-normal prognostic covariate ``X``::

    h(t) = gamma * lam * t**(gamma - 1) * exp(log(true_hr) * A + covariate_log_hr * X)

Dropout times are exponential with a covariate-dependent hazard whose form
depends on the scenario:

``CONTROL_HEAVY``
    ``lam * exp(log(0.5) * A + log(2) * X)``: long survivors drop out more,
    mostly in the control arm.
``EXPERIMENTAL_HEAVY``
    ``lam * exp(log(2) * A + log(0.5) * A * X)``: experimental patients with
    short survival drop out more.

Follow-up ends at ``t_max``.  A trial's stream is ``substream(seed, trial)``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .analysis import Criterion, find_tipping_point, run_sweep
from .imputation import Arm, Method
from .streams import derive_seed, substream
from .survival import EstimationError, TrialDataset, cox_fit

LAMBDA = math.log(2) / 8


class Scenario(enum.Enum):
    CONTROL_HEAVY = "control-heavy"
    EXPERIMENTAL_HEAVY = "experimental-heavy"


# Censoring log-hazard coefficients on (A, X, A*X).
CENSORING_COEFS = {
    Scenario.CONTROL_HEAVY: (math.log(0.5), math.log(2), 0.0),
    Scenario.EXPERIMENTAL_HEAVY: (math.log(2), 0.0, math.log(0.5)),
}


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of the trial generator.

    ``censoring_scale`` multiplies the dropout hazard; 0 switches dropout off
    and leaves only administrative censoring at ``t_max``.
    """

    true_hr: float = 0.7
    gamma: float = 0.6
    scenario: Scenario = Scenario.CONTROL_HEAVY
    n: int = 2000
    lam: float = LAMBDA
    covariate_log_hr: float = math.log(0.75)
    t_max: float = 15.0
    n_trials: int = 100
    seed: int = 0
    censoring_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be a positive even number")
        for name in ("true_hr", "gamma", "lam", "t_max"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value}")
        if self.censoring_scale < 0:
            raise ValueError("censoring_scale must be nonnegative")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")


# Scenario numbering of the 20-cell design: (scenario, gamma, true_hr).
SCENARIOS = {
    i + 1: (scenario, gamma, hr)
    for i, (scenario, gamma, hr) in enumerate(
        (s, g, h)
        for s in (Scenario.CONTROL_HEAVY, Scenario.EXPERIMENTAL_HEAVY)
        for g in (0.6, 1.5)
        for h in (0.7, 0.8, 0.9, 1.0, 1.1)
    )
}


def scenario_config(number, **overrides):
    """Configuration for design cell ``number`` (1-20)."""
    scenario, gamma, hr = SCENARIOS[number]
    return SimulationConfig(true_hr=hr, gamma=gamma, scenario=scenario, **overrides)


def simulate_trial(config, trial=0):
    """Generate one trial.

    Ties are resolved as event before censoring before administrative
    cut-off.
    """
    rng = substream(config.seed, trial)
    n = config.n
    arm = rng.permutation(np.repeat(np.array([0, 1], dtype=np.int8), n // 2))
    x = rng.standard_normal(n)
    u = rng.random(n)
    e_c = rng.standard_exponential(n)
    linpred = math.log(config.true_hr) * arm + config.covariate_log_hr * x
    t_event = (-np.log1p(-u) / (config.lam * np.exp(linpred))) ** (1.0 / config.gamma)
    b_a, b_x, b_ax = CENSORING_COEFS[config.scenario]
    c_rate = config.censoring_scale * config.lam * np.exp(b_a * arm + b_x * x + b_ax * arm * x)
    with np.errstate(divide="ignore"):
        t_cens = np.where(c_rate > 0, e_c / c_rate, np.inf)
    event = t_event <= np.minimum(t_cens, config.t_max)
    dropout = ~event & (t_cens <= config.t_max)
    time = np.minimum(np.minimum(t_event, t_cens), config.t_max)
    width = len(str(n))
    ids = [f"S{i + 1:0{width}d}" for i in range(n)]
    return TrialDataset(ids, arm, time, event, dropout, config.t_max, covariate=x)


@dataclass(frozen=True)
class ScenarioSummary:
    mean_obs_hr: float
    signif_pct: float
    dropout_ctr_pct: float
    dropout_exp_pct: float
    n_trials: int
    n_failed: int = 0


def _trial_stats(task):
    config, trial = task
    data = simulate_trial(config, trial)
    drop_c, drop_e = data.dropout_rate(0), data.dropout_rate(1)
    try:
        est = cox_fit(data)
    except EstimationError as exc:
        return None, str(exc), drop_c, drop_e
    return est, None, drop_c, drop_e


def summarize_scenario(config, workers=1):
    """Mean observed HR, significance rate and arm-wise dropout over ``n_trials``.

    ``mean_obs_hr`` is the exponential of the mean log hazard ratio; a trial is
    significant when its upper 95% limit is below 1.  Trials whose Cox fit
    fails are dropped with a warning and counted in ``n_failed``.
    """
    rows = parallel_map(_trial_stats, [(config, i) for i in range(config.n_trials)], workers)
    estimates = [r[0] for r in rows if r[0] is not None]
    failed = [r[1] for r in rows if r[0] is None]
    if failed:
        warnings.warn(f"{len(failed)} simulated trials failed to fit: {failed[0]}",
                      RuntimeWarning, stacklevel=2)
    if not estimates:
        raise EstimationError("every simulated trial failed to fit")
    log_hr = np.array([e.log_hr for e in estimates])
    return ScenarioSummary(
        mean_obs_hr=float(np.exp(log_hr.mean())),
        signif_pct=100.0 * float(np.mean([e.ci_high < 1 for e in estimates])),
        dropout_ctr_pct=100.0 * float(np.mean([r[2] for r in rows])),
        dropout_exp_pct=100.0 * float(np.mean([r[3] for r in rows])),
        n_trials=len(estimates),
        n_failed=len(failed),
    )


@dataclass(frozen=True)
class TippingDistribution:
    """Per-trial tipping values of one experiment cell.

    ``values[i]`` is ``None`` when trial ``i`` never tipped on the grid.
    ``magnitudes`` measures how much stress was needed: ``1 - delta`` for
    deflation, ``delta - 1`` for inflation and ``kappa`` for model-free
    sweeps, with ``inf`` for trials that never tipped.
    """

    method: Method
    values: tuple
    already_tipped: int

    @property
    def never_tipped(self):
        return sum(v is None for v in self.values)

    @property
    def magnitudes(self):
        return np.array([math.inf if v is None else stress_magnitude(self.method, v)
                         for v in self.values])

    @property
    def median_magnitude(self):
        return float(np.median(self.magnitudes))

    def quartiles(self):
        return tuple(float(q) for q in np.percentile(self.magnitudes, [25, 50, 75]))


def stress_magnitude(method, value):
    if Method(method).model_based:
        return abs(1.0 - value)
    return float(value)


def _tipping_trial(task):
    config, trial, spec, grid, criterion = task
    data = simulate_trial(config, trial)
    spec = dataclasses.replace(spec, seed=derive_seed(config.seed, trial, 1))
    sweep = run_sweep(data, spec, grid, criterion=criterion)
    return find_tipping_point(sweep)


def run_tipping_experiment(config, spec, grid, *, criterion=Criterion.UPPER_CI, workers=1):
    """Run a tipping-point sweep on each of ``config.n_trials`` simulated trials.

    The imputation seed of trial ``i`` is derived from ``(config.seed, i)``.
    """
    tasks = [(config, i, spec, tuple(grid), criterion) for i in range(config.n_trials)]
    tips = parallel_map(_tipping_trial, tasks, workers)
    values = tuple(None if t is None else t.value for t in tips)
    already = sum(1 for t in tips if t is not None and t.already_tipped)
    return TippingDistribution(spec.method, values, already)


def target_arm_for(scenario):
    """Arm whose dropouts are imputed: the one with heavier dropout."""
    return Arm.CONTROL if Scenario(scenario) is Scenario.CONTROL_HEAVY else Arm.EXPERIMENTAL

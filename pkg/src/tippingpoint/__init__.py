"""Tipping-point sensitivity analysis for time-to-event trials with informative dropout."""

from .analysis import (Criterion, PooledEstimate, PooledKmCurve, ScanOrder, SensitivitySweep,
                       TippingPoint, anchor_hr, compute_j2r_delta, find_tipping_point,
                       kappa_event_rate_anchor, pool_km_curves, rubin_pool, run_sweep)
from .imputation import (Arm, Direction, DonorPool, ImputationSpec, ImputedDataset, Method,
                         SelectionCriteria, build_donor_pool, impute, impute_deterministic,
                         impute_donor_sampling, impute_model_based, select_imputable)
from .planning import Imbalance, PlanRecommendation, plan, plan_dataset
from .simulation import (Scenario, ScenarioSummary, SimulationConfig, TippingDistribution,
                         run_tipping_experiment, scenario_config, simulate_trial,
                         summarize_scenario)
from .survival import (ConvergenceError, EstimationError, Family, HrEstimate, KmCurve,
                       ParametricFit, Reason, SubjectRecord, TrialDataset, cox_fit,
                       cumhaz_eval, fit_exponential, fit_weibull, hazard_eval, km_fit,
                       reverse_km, sample_conditional_event_time, survival_eval)

__version__ = "0.1.0"

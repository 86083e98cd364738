"""
How often and how hard do trials tip?
=====================================

Scenario summaries for the 20-cell design and a small tipping experiment
comparing the exponential and Weibull imputation models.
"""

# %%
from tippingpoint import (Arm, ImputationSpec, Method, SelectionCriteria,
                          run_tipping_experiment, scenario_config, summarize_scenario)

for number in (1, 6, 11, 16):
    s = summarize_scenario(scenario_config(number, n_trials=20))
    print(f"scenario {number:2d}: HR {s.mean_obs_hr:.3f}  signif {s.signif_pct:5.1f}%  "
          f"dropout {s.dropout_ctr_pct:.1f}% / {s.dropout_exp_pct:.1f}%")

# %% [markdown]
# With a decreasing-hazard event process (shape 0.6) the exponential model
# overstates the hazard after dropout, so more deflation is needed before the
# upper confidence limit reaches 1.

# %%
grid = [round(0.05 * i, 2) for i in range(1, 21)]
cfg = scenario_config(1, n_trials=5, seed=11)
for method in (Method.MODEL_EXPONENTIAL, Method.MODEL_WEIBULL):
    spec = ImputationSpec(method, SelectionCriteria(Arm.CONTROL), 1.0, 40)
    dist = run_tipping_experiment(cfg, spec, grid)
    print(method.value, "tipping deltas:", dist.values, "median deflation:", dist.median_magnitude)

"""Walk through a full synthetic-control study on a simulated store panel.

Sixteen treated stores get a +5% uplift after an intervention; 43 control
stores are untouched. We fit the candidate models on the 52 training weeks,
look at which ones the data prefers, then forecast what the treated stores
would have sold without the intervention and compare with what they did sell.

    python demos/store_remodel_study.py
"""
import numpy as np

from mvdlm_causal import SimConfig, simulate_panel
from mvdlm_causal.pipeline import design_from_sim, evaluate_study, fit_study

cfg = SimConfig(effect=0.05, rho=0.3, seed=12)
treated, controls, truth = simulate_panel(cfg)
design = design_from_sim(cfg)
print(f"{cfg.q} treated and {cfg.c} control stores; {cfg.T} training weeks, "
      f"{cfg.m} transition weeks, {cfg.k - cfg.m} evaluation weeks")

# Step 1: predictors are principal components of the control stores.
fit = fit_study(treated, controls, design)
ratio = fit.basis.explained_ratio
print("\nvariance explained by the leading components:", np.round(ratio[:4], 3))

# Step 2: sequential model probabilities from one-step predictive densities.
print("\nmodel probabilities at the end of training:")
for label, w in zip(fit.labels, fit.weights.final):
    print(f"  {label:>5}: {w:.3f}")

# Step 3: freeze at the intervention and sample counterfactual paths.
ev = evaluate_study(fit, treated, S=10_000, seed=1)
bma = ev.lift["bma"]
print("\nper-store percent lift over the evaluation window (BMA mixture):")
for uid, s, true in zip(bma.unit_ids, bma.units, truth.true_lift()):
    lo, mid, hi = s.quantiles
    print(f"  {uid}: {mid:6.2f}%  [{lo:6.2f}, {hi:6.2f}]   truth {true:.2f}%")

# Step 4: the aggregate, with and without cross-store dependence.
for mode in ("multivariate", "independent"):
    lo, mid, hi = getattr(bma, mode).quantiles
    print(f"\naggregate lift, {mode:>12} mode: {mid:.2f}% [{lo:.2f}, {hi:.2f}]")
print("\nIgnoring the correlation between stores makes the aggregate interval "
      "look much tighter than the data supports.")

corr = ev.correlation["bma"]
off = corr[~np.eye(cfg.q, dtype=bool)]
print(f"\nmedian correlation between stores' counterfactual totals: {np.median(off):.2f}")

"""End-to-end study: fit the model set on training data, freeze, sample, summarise."""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .causal import (
    DEFAULT_DRAWS,
    CounterfactualDraws,
    LiftSummary,
    StudyDesign,
    counterfactual_correlation,
    freeze_and_sample_paths,
    summarize_lift,
)
from .errors import ArgumentError
from .filter import FilterTrajectory
from .model_set import BMAWeights, ModelSetConfig, cumulative_weights, model_averaged_draws, run_model_set
from .synth import PCBasis, build_regressors, compute_pc_basis


@dataclass(eq=False)
class FitResult:
    design: StudyDesign
    basis: PCBasis
    trajectories: List[FilterTrajectory]
    weights: BMAWeights
    config: ModelSetConfig

    @property
    def labels(self):
        return self.weights.labels

    @property
    def scored_times(self):
        """Panel row index of every scored training step."""
        return np.arange(self.config.prior.init_weeks, self.design.T)


@dataclass(eq=False)
class EvalResult:
    draws: Dict[str, CounterfactualDraws]
    lift: Dict[str, LiftSummary]
    correlation: Dict[str, np.ndarray]
    window: np.ndarray
    form: str
    seed: int
    S: int
    unit_ids: tuple = field(default=())


def fit_study(treated, controls, design, config=ModelSetConfig(), centering="training",
              standardize=False, threads=1):
    """PCA basis from ``controls``, then every candidate model on the training rows."""
    Y = np.asarray(treated, dtype=float)
    if Y.shape[0] != design.T + design.k:
        raise ArgumentError(f"treated has {Y.shape[0]} rows, design spans {design.T + design.k}")
    if controls.T != design.T:
        raise ArgumentError("control panel and design disagree on the training length")
    p_max = max(config.candidates)
    basis = compute_pc_basis(controls, p_max, centering=centering, standardize=standardize)
    trajs = run_model_set(Y[: design.T], basis, config, threads=threads)
    labels = [c.label for c in config.expand()]
    return FitResult(design, basis, trajs, cumulative_weights(trajs, labels=labels), config)


def evaluate_study(fit, treated, S=DEFAULT_DRAWS, seed=0, threads=1, window="evaluation",
                   form="summed"):
    """Counterfactual draws, lift summaries and correlations per model and for the BMA mixture.

    Model weights are the ones reached at the end of training; post-period
    outcomes never enter the fit.
    """
    design = fit.design
    Y = np.asarray(treated, dtype=float)
    observed = Y[design.T : design.T + design.k]
    if window == "evaluation":
        win = design.evaluation
    elif window == "post":
        win = design.post
    else:
        win = np.asarray(window, dtype=int)
    ids = tuple(design.treated_ids) or None
    draws, lift, corr = {}, {}, {}
    for cand, traj in zip(fit.config.expand(), fit.trajectories):
        X = build_regressors(fit.basis, cand.n_pcs)[design.T : design.T + design.k]
        d = freeze_and_sample_paths(traj.final, X, traj.spec, S=S, seed=seed, threads=threads,
                                    model=cand.label)
        draws[cand.label] = d
    bma = model_averaged_draws([draws[l] for l in fit.labels], fit.weights.final, S, seed)
    draws["bma"] = bma
    for label, d in draws.items():
        lift[label] = summarize_lift(d, observed, win, form=form, seed=seed, unit_ids=ids)
        corr[label] = counterfactual_correlation(d, win) if d.S >= 2 else None
    return EvalResult(draws, lift, corr, win, form, seed, S, ids or ())


def run_study(treated, controls, design, config=ModelSetConfig(), S=DEFAULT_DRAWS, seed=0,
              threads=1, **kwargs):
    fit_kw = {k: kwargs.pop(k) for k in ("centering", "standardize") if k in kwargs}
    fit = fit_study(treated, controls, design, config, threads=threads, **fit_kw)
    return fit, evaluate_study(fit, treated, S=S, seed=seed, threads=threads, **kwargs)


def design_from_sim(config):
    """Study design matching a :class:`~mvdlm_causal.sim.SimConfig`."""
    return StudyDesign(config.T, config.m, config.k,
                       treated_ids=tuple(f"T{j + 1:02d}" for j in range(config.q)),
                       control_ids=tuple(f"C{j + 1:02d}" for j in range(config.c)))


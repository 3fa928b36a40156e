"""Candidate model families, sequential model probabilities and mixture draws."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .causal import CounterfactualDraws
from .errors import ArgumentError, StepError
from .filter import DEFAULT_BETA, DEFAULT_DELTA, ModelSpec, filter_run
from .priors import PriorRecipe, prior_from_initial_window
from .rng import stream
from .synth import build_regressors


@dataclass(frozen=True)
class Candidate:
    n_pcs: int
    delta: float
    beta: float
    label: str


@dataclass(frozen=True)
class ModelSetConfig:
    candidates: Sequence[int] = (1, 2, 3, 4, 10)
    discounts: Sequence[Tuple[float, float]] = ((DEFAULT_DELTA, DEFAULT_BETA),)
    prior: PriorRecipe = field(default_factory=PriorRecipe)

    def __post_init__(self):
        if not self.candidates:
            raise ArgumentError("candidate list is empty")
        if not self.discounts:
            raise ArgumentError("discount grid is empty")
        object.__setattr__(self, "candidates", tuple(int(c) for c in self.candidates))
        object.__setattr__(
            self, "discounts", tuple((float(d), float(b)) for d, b in self.discounts)
        )

    def expand(self):
        """One :class:`Candidate` per (PC count, discount pair)."""
        grid = len(self.discounts) > 1
        out = []
        for d, b in self.discounts:
            for p in self.candidates:
                label = f"pc{p}" + (f"_d{d:g}_b{b:g}" if grid else "")
                out.append(Candidate(p, d, b, label))
        return out


@dataclass(frozen=True, eq=False)
class BMAWeights:
    weights: np.ndarray  # time x models
    labels: Tuple[str, ...]

    @property
    def final(self):
        return self.weights[-1]


def fit_candidate(treated, basis, cand, recipe):
    """Prior from the first ``recipe.init_weeks`` rows, then filter the rest."""
    Y = np.asarray(treated, dtype=float)
    X = build_regressors(basis, cand.n_pcs)[: Y.shape[0]]
    L = recipe.init_weeks
    if Y.shape[0] <= L:
        raise ArgumentError(
            f"training window of {Y.shape[0]} rows leaves nothing after {L} initial rows"
        )
    prior = prior_from_initial_window(Y[:L], X[:L], recipe)
    spec = ModelSpec(prior, delta=cand.delta, beta=cand.beta, name=cand.label)
    try:
        traj = filter_run(Y[L:], X[L:], spec, t0=L)
    except StepError as exc:
        raise StepError(exc.t, exc.cause, model=cand.label) from exc
    return traj


def run_model_set(treated, basis, config, threads=1):
    """Fit every candidate on the training rows of ``treated``; one trajectory each."""
    cands = config.expand()
    for c in cands:
        if not 1 <= c.n_pcs <= basis.p_max:
            raise ArgumentError(f"candidate {c.label} needs {c.n_pcs} PCs, basis has {basis.p_max}")

    def fit(c):
        return fit_candidate(treated, basis, c, config.prior)

    if threads > 1 and len(cands) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fit, cands))
    return [fit(c) for c in cands]


def cumulative_weights(trajectories, prior_weights=None, labels=None):
    """Posterior model probabilities after each scored step.

    Row ``t`` is proportional to ``prior * exp(sum of log predictive densities
    up to and including step t)``, normalised in log space.
    """
    if not trajectories:
        raise ArgumentError("no trajectories")
    ll = [np.asarray(t.loglik if hasattr(t, "loglik") else t, dtype=float) for t in trajectories]
    lengths = {len(x) for x in ll}
    if len(lengths) != 1:
        raise ArgumentError(f"loglik lengths differ: {sorted(lengths)}")
    n_models = len(ll)
    if prior_weights is None:
        prior_weights = np.full(n_models, 1.0 / n_models)
    prior_weights = np.asarray(prior_weights, dtype=float)
    if prior_weights.shape != (n_models,) or np.any(prior_weights < 0):
        raise ArgumentError("prior weights must be a non-negative vector, one per model")
    if abs(prior_weights.sum() - 1) > 1e-9:
        raise ArgumentError(f"prior weights sum to {prior_weights.sum()}, not 1")
    with np.errstate(divide="ignore"):
        logw = np.log(prior_weights)[None, :] + np.cumsum(np.column_stack(ll), axis=0)
    logw -= logsumexp(logw, axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    if labels is None:
        labels = tuple(getattr(t, "name", "") or f"m{i}" for i, t in enumerate(trajectories))
    return BMAWeights(w, tuple(labels))


def mixture_counts(weights, total, seed):
    """Multinomial allocation of ``total`` draws across models."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
        raise ArgumentError("weights must be non-negative and sum to 1")
    return stream(seed, "mixture-counts").multinomial(total, w / w.sum())


def model_averaged_draws(per_model_draws, final_weights, total, seed):
    """Mixture of per-model counterfactual draws.

    Each output draw picks a model with probability ``final_weights`` and takes
    one of that model's draws, without replacement unless the model is
    allocated more draws than it holds.
    """
    w = np.asarray(final_weights, dtype=float)
    if len(per_model_draws) != w.size:
        raise ArgumentError("one weight per model required")
    counts = mixture_counts(w, total, seed)
    pieces = []
    for i, (d, cnt) in enumerate(zip(per_model_draws, counts)):
        if w[i] > 0 and (d is None or d.S == 0):
            raise ArgumentError(f"model {i} has positive weight but no draws")
        if cnt == 0:
            continue
        rng = stream(seed, "mixture-pick", i)
        idx = rng.choice(d.S, size=cnt, replace=cnt > d.S)
        pieces.append(d.draws[idx])
    out = np.concatenate(pieces, axis=0)
    out = out[stream(seed, "mixture-shuffle").permutation(total)]
    return CounterfactualDraws(out, seed=seed, model="bma")

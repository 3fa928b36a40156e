"""Discount-factor multivariate DLM forward filter.

Model, for a ``q``-vector ``y_t`` and shared ``p``-vector of predictors ``F_t``::

    y_t'     = F_t' Theta_t + nu_t',           nu_t    ~ N(0, v Sigma_t)
    Theta_t  = G Theta_{t-1} + Omega_t,        Omega_t ~ MN(0, W_t, Sigma_t)

with ``W_t`` implied by the state discount ``delta`` and ``Sigma_t`` drifting by
a matrix-beta evolution set by ``beta``. Everything stays conjugate in the
``NIWParams`` family; see :mod:`mvdlm_causal.stats` for the df convention.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ArgumentError, DataError, MVDLMError, StepError
from .stats import MultivariateT, NIWParams, discount_df, mvt_log_density

# Observational scale factor; fixed.
V = 1.0

DEFAULT_DELTA = 0.99
DEFAULT_BETA = 0.95

POSTERIOR = "posterior"
PRIOR = "prior"


def _sym(a):
    return (a + a.T) / 2


@dataclass(frozen=True, eq=False)
class ModelSpec:
    prior: NIWParams
    delta: float = DEFAULT_DELTA
    beta: float = DEFAULT_BETA
    G: np.ndarray = None
    name: str = ""

    def __post_init__(self):
        for label, val in (("delta", self.delta), ("beta", self.beta)):
            if not 0 < val <= 1:
                raise ArgumentError(f"{label} must lie in (0, 1], got {val}")
        p = self.prior.p
        G = np.eye(p) if self.G is None else np.atleast_2d(np.asarray(self.G, dtype=float))
        if G.shape != (p, p):
            raise ArgumentError(f"G has shape {G.shape}, expected {(p, p)}")
        object.__setattr__(self, "G", G)

    @property
    def p(self):
        return self.prior.p

    @property
    def q(self):
        return self.prior.q

    def initial_state(self, t=0):
        return FilterState(t, self.prior, POSTERIOR)


@dataclass(frozen=True, eq=False)
class FilterState:
    t: int
    params: NIWParams
    phase: str = POSTERIOR


@dataclass(eq=False)
class FilterTrajectory:
    states: List[FilterState] = field(default_factory=list)
    loglik: List[float] = field(default_factory=list)
    forecasts: List[MultivariateT] = field(default_factory=list)
    name: str = ""
    spec: Optional[ModelSpec] = None

    def __len__(self):
        return len(self.states)

    @property
    def final(self):
        return self.states[-1]

    def loglik_array(self):
        return np.asarray(self.loglik, dtype=float)


def evolve(state, spec):
    """Posterior at ``t-1`` to prior at ``t``: ``(G M, G C G'/delta, beta n, beta D)``."""
    if state.phase != POSTERIOR:
        raise ArgumentError("evolve expects a posterior-phase state")
    P = state.params
    n_prior = discount_df(P.n, spec.beta)
    G = spec.G
    a = G @ P.M
    R = _sym(G @ P.C @ G.T / spec.delta)
    return FilterState(state.t + 1, NIWParams(a, R, n_prior, spec.beta * P.D), PRIOR)


def _check_F(F, p):
    F = np.asarray(F, dtype=float).ravel()
    if F.size != p:
        raise ArgumentError(f"regressor vector has length {F.size}, expected {p}")
    if not np.all(np.isfinite(F)):
        raise DataError("regressor vector has non-finite entries")
    return F


def forecast_one_step(prior, F, spec):
    """One-step predictive Student-t ``T_n(a'F, (F'RF + v) D/n)``."""
    if prior.phase != PRIOR:
        raise ArgumentError("forecast_one_step expects a prior-phase state")
    P = prior.params
    F = _check_F(F, P.p)
    f = P.M.T @ F
    qt = float(F @ P.C @ F) + V
    return MultivariateT(P.n, f, qt * P.D / P.n)


def update(prior, F, y, spec):
    """Condition a prior-phase state on observation ``y``."""
    if prior.phase != PRIOR:
        raise ArgumentError("update expects a prior-phase state")
    P = prior.params
    F = _check_F(F, P.p)
    y = np.asarray(y, dtype=float).ravel()
    if y.size != P.q:
        raise ArgumentError(f"observation has length {y.size}, expected {P.q}")
    if not np.all(np.isfinite(y)):
        raise DataError(f"non-finite observation at t={prior.t}")
    RF = P.C @ F
    qt = float(F @ RF) + V
    A = RF / qt
    e = y - P.M.T @ F
    M = P.M + np.outer(A, e)
    C = _sym(P.C - np.outer(A, A) * qt)
    D = _sym(P.D + np.outer(e, e) / qt)
    return FilterState(prior.t, NIWParams(M, C, P.n + 1, D), POSTERIOR)


def filter_run(treated, regressors, spec, t0=0):
    """Filter ``treated`` (``T x q``) on ``regressors`` (``T x p``) from ``spec.prior``.

    Each row runs evolve, forecast, score and update. Row ``i`` is labelled time
    ``t0 + i + 1`` in the returned states and in any error.
    """
    Y = np.asarray(treated, dtype=float)
    X = np.asarray(regressors, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or X.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise ArgumentError(f"treated {Y.shape} and regressors {X.shape} do not align")
    if Y.shape[1] != spec.q or X.shape[1] != spec.p:
        raise ArgumentError(
            f"spec expects q={spec.q}, p={spec.p}; got treated {Y.shape}, regressors {X.shape}"
        )
    traj = FilterTrajectory(name=spec.name, spec=spec)
    state = spec.initial_state(t0)
    for i in range(Y.shape[0]):
        try:
            prior = evolve(state, spec)
            fc = forecast_one_step(prior, X[i], spec)
            if not np.all(np.isfinite(Y[i])):
                raise DataError(f"missing or non-finite treated value at t={prior.t}")
            ll = mvt_log_density(fc, Y[i])
            state = update(prior, X[i], Y[i], spec)
        except (MVDLMError, np.linalg.LinAlgError) as exc:
            raise StepError(t0 + i + 1, exc) from exc
        traj.states.append(state)
        traj.loglik.append(ll)
        traj.forecasts.append(fc)
    return traj

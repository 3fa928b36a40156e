"""Empirical-Bayes initial priors from a short initial stretch of training data."""
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, InsufficientDataError
from .stats import NIWParams


@dataclass(frozen=True)
class PriorRecipe:
    """Constants for :func:`prior_from_initial_window`.

    ``init_weeks`` rows seed the prior and are then left out of the filtered,
    scored training window. ``c0`` inflates the least-squares coefficient
    covariance, ``df`` is the prior degrees of freedom ``n0``, ``shrinkage``
    pulls the residual covariance towards its diagonal and ``floor`` is the
    per-unit variance used when the residuals vanish.
    """

    init_weeks: int = 20
    c0: float = 1.0
    df: float = 10.0
    shrinkage: float = 0.1
    floor: float = 1e-6

    def __post_init__(self):
        if self.init_weeks < 1:
            raise ArgumentError("init_weeks must be >= 1")
        if self.c0 <= 0 or self.df <= 0 or self.floor <= 0:
            raise ArgumentError("c0, df and floor must be positive")
        if not 0 <= self.shrinkage <= 1:
            raise ArgumentError("shrinkage must lie in [0, 1]")


def prior_from_initial_window(treated_init, regressors_init, recipe=PriorRecipe()):
    Y = np.asarray(treated_init, dtype=float)
    X = np.asarray(regressors_init, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    L, ncol = X.shape
    if Y.shape[0] != L:
        raise ArgumentError(f"{Y.shape[0]} outcome rows vs {L} regressor rows")
    if L < ncol:
        raise InsufficientDataError(
            f"initial window of {L} rows cannot identify {ncol} coefficients"
        )
    XtX = X.T @ X
    try:
        XtX_inv = np.linalg.inv(XtX)
    except np.linalg.LinAlgError as exc:
        raise InsufficientDataError("initial-window design is singular") from exc
    XtX_inv = (XtX_inv + XtX_inv.T) / 2
    M0 = XtX_inv @ X.T @ Y
    E = Y - X @ M0
    resid_df = L - ncol
    q = Y.shape[1]
    S = E.T @ E / max(resid_df, 1)
    if resid_df == 0 or np.max(np.diag(S)) <= recipe.floor:
        S0 = recipe.floor * np.eye(q)
    else:
        diag = np.diag(np.diag(S))
        S0 = (1 - recipe.shrinkage) * S + recipe.shrinkage * diag
        S0 = S0 + recipe.floor * np.eye(q)
    return NIWParams(M0, recipe.c0 * XtX_inv, recipe.df, recipe.df * S0)

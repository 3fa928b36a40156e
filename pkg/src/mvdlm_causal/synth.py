"""Synthetic-control predictors from principal components of control outcomes."""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DataError, DegenerateInputError


@dataclass(frozen=True, eq=False)
class ControlPanel:
    """Control-unit outcomes over the full window: ``T`` training rows then ``k`` post rows."""

    values: np.ndarray
    unit_ids: Sequence[str]
    T: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ArgumentError(f"control values must be 2-D, got shape {v.shape}")
        if v.shape[1] < 1:
            raise DataError("need at least one control unit")
        if not np.all(np.isfinite(v)):
            raise DataError("control panel has missing entries")
        if not 2 <= self.T <= v.shape[0]:
            raise DataError(f"training length T={self.T} must be in [2, {v.shape[0]}]")
        ids = tuple(str(u) for u in self.unit_ids) if self.unit_ids is not None else None
        if ids is None:
            ids = tuple(f"c{j}" for j in range(v.shape[1]))
        if len(ids) != v.shape[1]:
            raise ArgumentError(f"{len(ids)} unit ids for {v.shape[1]} control columns")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "unit_ids", ids)

    @property
    def k(self):
        return self.values.shape[0] - self.T

    @property
    def c(self):
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class PCBasis:
    loadings: np.ndarray  # c x p_max, orthonormal columns
    scores: np.ndarray  # (T+k) x p_max
    explained_variance: np.ndarray
    column_centers: np.ndarray
    column_scales: np.ndarray
    total_variance: float

    @property
    def p_max(self):
        return self.loadings.shape[1]

    @property
    def explained_ratio(self):
        return self.explained_variance / self.total_variance


def compute_pc_basis(panel, p_max, centering="training", standardize=False):
    """Principal components of the column-centred control matrix.

    Columns are centred (and optionally scaled) with statistics from the
    training rows only unless ``centering="full"``; scores cover every row.
    Each component's largest-magnitude loading is made positive.
    """
    if centering not in ("training", "full"):
        raise ArgumentError(f"centering must be 'training' or 'full', got {centering!r}")
    X = panel.values
    ref = X[: panel.T] if centering == "training" else X
    if not 1 <= p_max <= min(panel.c, panel.T - 1):
        raise ArgumentError(
            f"p_max={p_max} must be in [1, min(c={panel.c}, T-1={panel.T - 1})]"
        )
    sd = ref.std(axis=0, ddof=1)
    if np.all(sd <= 1e-12 * np.maximum(1.0, np.abs(ref).max(axis=0))):
        raise DegenerateInputError("every control column is constant over the reference window")
    centers = ref.mean(axis=0)
    scales = np.where(sd > 0, sd, 1.0) if standardize else np.ones(panel.c)
    Z = (X - centers) / scales
    Zref = Z[: panel.T] if centering == "training" else Z
    _, s, Vt = np.linalg.svd(Zref, full_matrices=False)
    V = Vt.T
    pivots = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[pivots, np.arange(V.shape[1])])
    ev = s**2 / (Zref.shape[0] - 1)
    loadings = np.ascontiguousarray(V[:, :p_max])
    return PCBasis(
        loadings=loadings,
        scores=Z @ loadings,
        explained_variance=ev[:p_max],
        column_centers=centers,
        column_scales=scales,
        total_variance=float(ev.sum()),
    )


def build_regressors(basis, p):
    """Intercept column followed by the first ``p`` score columns."""
    if not 1 <= p <= basis.p_max:
        raise ArgumentError(f"p={p} out of range [1, {basis.p_max}]")
    n = basis.scores.shape[0]
    return np.column_stack([np.ones(n), basis.scores[:, :p]])

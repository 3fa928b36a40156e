"""Synthetic panels with known ground truth, and brute-force reference oracles.

The oracles deliberately share no code with :mod:`mvdlm_causal.filter`:
``batch_regression_oracle`` solves the static conjugate regression in one
shot, and ``univariate_dlm_oracle`` runs the scalar-variance recursions for a
single series with its own arithmetic.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as sps

from .errors import ArgumentError, NumericError
from .rng import stream
from .stats import NIWParams
from .synth import ControlPanel


@dataclass(frozen=True)
class SimConfig:
    """Synthetic panel recipe; defaults mirror a 16 treated / 43 control weekly study.

    ``effect`` is the multiplicative treatment effect (0.05 is +5%), applied to
    treated units over the evaluation rows ``[T+m, T+k)``. Treated residuals are
    equicorrelated with correlation ``rho``.
    """

    q: int = 16
    c: int = 43
    T: int = 52
    m: int = 8
    k: int = 24
    n_factors: int = 2
    factor_ar: float = 0.8
    factor_scale: float = 100.0
    control_level: float = 1000.0
    control_noise: float = 15.0
    treated_level: float = 1000.0
    treated_noise: float = 20.0
    loading_spread: float = 0.0
    rho: float = 0.3
    effect: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for name in ("q", "c", "T", "k", "n_factors"):
            if getattr(self, name) < 1:
                raise ArgumentError(f"{name} must be positive")
        if self.m < 0 or self.m >= self.k:
            raise ArgumentError("need 0 <= m < k")
        if not -1 < self.rho < 1:
            raise ArgumentError("|rho| must be < 1")
        if self.rho < -1 / (self.q - 1 if self.q > 1 else 1):
            raise ArgumentError("rho too negative for a valid equicorrelation matrix")
        if np.any(np.asarray(self.effect) <= -1):
            raise ArgumentError("effect must exceed -100%")
        if not -1 < self.factor_ar < 1:
            raise ArgumentError("factor_ar must lie in (-1, 1)")


@dataclass(eq=False)
class SimTruth:
    factors: np.ndarray
    control_loadings: np.ndarray
    treated_loadings: np.ndarray
    untreated: np.ndarray  # Y(0) for every row
    residual_cov: np.ndarray
    effect: np.ndarray  # per treated unit
    treated_ids: tuple = ()
    control_ids: tuple = ()
    config: Optional[SimConfig] = field(default=None, repr=False)

    def true_lift(self, window_rows=None, form="summed"):
        """Exact percent lift of observed over untreated outcomes in the given rows."""
        cfg = self.config
        rows = np.arange(cfg.T + cfg.m, cfg.T + cfg.k) if window_rows is None else window_rows
        y0 = self.untreated[rows]
        y1 = y0 * (1 + self.effect)
        if form == "summed":
            return 100 * (y1.sum(0) - y0.sum(0)) / y0.sum(0)
        return (100 * (y1 - y0) / y0).mean(0)


def simulate_panel(config):
    """Return ``(treated, ControlPanel, SimTruth)``; ``treated`` has ``T + k`` rows."""
    cfg = config
    rng = stream(cfg.seed, "simulate")
    N = cfg.T + cfg.k
    r = cfg.n_factors
    phi = cfg.factor_ar
    f = np.empty((N, r))
    f[0] = rng.standard_normal(r)
    for t in range(1, N):
        f[t] = phi * f[t - 1] + np.sqrt(1 - phi**2) * rng.standard_normal(r)
    f *= cfg.factor_scale
    # decreasing factor strength keeps the component order stable
    strength = 1.0 / (1 + np.arange(r))
    lam_c = rng.standard_normal((cfg.c, r)) * strength + np.where(np.arange(r) == 0, 1.0, 0.0)
    lam_y = rng.standard_normal((cfg.q, r)) * strength + np.where(np.arange(r) == 0, 1.0, 0.0)
    ctrl_level = cfg.control_level * (1 + cfg.loading_spread * rng.uniform(-1, 1, cfg.c))
    trt_level = cfg.treated_level * (1 + cfg.loading_spread * rng.uniform(-1, 1, cfg.q))
    X = ctrl_level + f @ lam_c.T + cfg.control_noise * rng.standard_normal((N, cfg.c))
    Sigma = cfg.treated_noise**2 * ((1 - cfg.rho) * np.eye(cfg.q) + cfg.rho)
    eps = rng.standard_normal((N, cfg.q)) @ np.linalg.cholesky(Sigma).T
    Y0 = trt_level + f @ lam_y.T + eps
    effect = np.broadcast_to(np.asarray(cfg.effect, dtype=float), (cfg.q,)).copy()
    Y = Y0.copy()
    Y[cfg.T + cfg.m :] *= 1 + effect
    treated_ids = tuple(f"T{j + 1:02d}" for j in range(cfg.q))
    control_ids = tuple(f"C{j + 1:02d}" for j in range(cfg.c))
    truth = SimTruth(f, lam_c, lam_y, Y0, Sigma, effect, treated_ids, control_ids, cfg)
    return Y, ControlPanel(X, control_ids, cfg.T), truth


def batch_regression_oracle(treated, regressors, prior=None):
    """Static conjugate posterior of ``Y = X Theta + E`` in one linear solve.

    With ``prior=None`` the reference prior is used (flat in Theta, n0 = -p,
    D0 = 0), which needs a full-rank design.
    """
    Y = np.asarray(treated, dtype=float)
    X = np.asarray(regressors, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    T, p = X.shape
    if prior is None:
        K = X.T @ X
        rhs = X.T @ Y
        if np.linalg.matrix_rank(K) < p:
            raise NumericError("singular design with a flat prior")
        M = np.linalg.solve(K, rhs)
        E = Y - X @ M
        return NIWParams(M, np.linalg.inv(K), T - p, E.T @ E)
    C0_inv = np.linalg.inv(prior.C)
    K = C0_inv + X.T @ X
    M = np.linalg.solve(K, C0_inv @ prior.M + X.T @ Y)
    C = np.linalg.inv(K)
    E = Y - X @ M
    dM = M - prior.M
    D = prior.D + E.T @ E + dM.T @ C0_inv @ dM
    return NIWParams(M, (C + C.T) / 2, prior.n + T, (D + D.T) / 2)


def univariate_dlm_oracle(series, regressors, m0, C0, n0, d0, delta, beta):
    """Scalar-variance discount DLM for one series; returns a dict of per-step arrays."""
    y = np.asarray(series, dtype=float).ravel()
    X = np.asarray(regressors, dtype=float)
    T, p = X.shape
    if y.size != T:
        raise ArgumentError("series and regressors differ in length")
    m = np.array(m0, dtype=float).ravel().copy()
    C = np.array(C0, dtype=float).copy()
    n, d = float(n0), float(d0)
    out = {key: [] for key in ("m", "C", "n", "d", "f", "Q", "n_prior", "loglik")}
    for t in range(T):
        F = X[t]
        R = [[C[i][j] / delta for j in range(p)] for i in range(p)]
        n_prior = beta * n
        d_prior = beta * d
        f = sum(F[i] * m[i] for i in range(p))
        RF = [sum(R[i][j] * F[j] for j in range(p)) for i in range(p)]
        qt = sum(F[i] * RF[i] for i in range(p)) + 1.0
        s = d_prior / n_prior
        e = y[t] - f
        ll = sps.t.logpdf(e, df=n_prior, scale=np.sqrt(qt * s))
        A = [RF[i] / qt for i in range(p)]
        m = np.array([m[i] + A[i] * e for i in range(p)])
        C = np.array([[R[i][j] - A[i] * A[j] * qt for j in range(p)] for i in range(p)])
        n = n_prior + 1
        d = d_prior + e * e / qt
        for key, val in (("m", m), ("C", C), ("n", n), ("d", d), ("f", f),
                         ("Q", qt * s), ("n_prior", n_prior), ("loglik", ll)):
            out[key].append(val)
    return {key: np.asarray(val) for key, val in out.items()}

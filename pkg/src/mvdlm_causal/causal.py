"""Counterfactual path sampling from a frozen posterior and percent-lift summaries."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DataError, ImproperDistributionError, NumericError, StepError
from .filter import POSTERIOR, V
from .rng import chunks, stream
from .stats import discount_df

QUANTILES = (0.025, 0.5, 0.975)
DEFAULT_DRAWS = 10_000


@dataclass(frozen=True)
class StudyDesign:
    """Row windows over the full panel.

    Training rows ``[0, T)``, transition ``[T, T+m)``, evaluation ``[T+m, T+k)``.
    """

    T: int
    m: int
    k: int
    treated_ids: Sequence[str] = ()
    control_ids: Sequence[str] = ()
    dates: Sequence[str] = ()

    def __post_init__(self):
        if self.T < 2:
            raise ArgumentError(f"training window needs T >= 2, got {self.T}")
        if self.m < 0:
            raise ArgumentError(f"transition length must be >= 0, got {self.m}")
        if self.k <= self.m:
            raise ArgumentError(f"empty evaluation window: k={self.k} <= m={self.m}")

    @property
    def evaluation(self):
        """Evaluation steps as indices into the ``k`` post-period rows."""
        return np.arange(self.m, self.k)

    @property
    def post(self):
        return np.arange(self.k)


@dataclass(frozen=True, eq=False)
class CounterfactualDraws:
    draws: np.ndarray  # S x k x q
    seed: int = 0
    model: str = ""

    def __post_init__(self):
        d = np.asarray(self.draws, dtype=float)
        if d.ndim != 3 or d.shape[0] < 1:
            raise ArgumentError(f"draws must be S x k x q with S >= 1, got {d.shape}")
        if not np.all(np.isfinite(d)):
            raise NumericError("counterfactual draws contain non-finite values")
        object.__setattr__(self, "draws", d)

    @property
    def S(self):
        return self.draws.shape[0]

    @property
    def k(self):
        return self.draws.shape[1]

    @property
    def q(self):
        return self.draws.shape[2]


def _sample_block(M0, C0, n0, D0, X, spec, count, rng):
    """Vectorised path composition for ``count`` draws; returns count x k x q.

    Each path's volatility scale after ``j`` simulated steps is
    ``beta^j D0 + sum_i beta^(j-i) e_i e_i' / q_i``, so a Gaussian with that
    covariance is ``beta^(j/2) L0 z + sum_i sqrt(beta^(j-i) / q_i) e_i zeta_i``
    with scalar ``zeta_i``. This avoids a per-draw Cholesky factorisation.
    """
    k = X.shape[0]
    q = D0.shape[0]
    G, delta, beta = spec.G, spec.delta, spec.beta
    identity_G = np.array_equal(G, np.eye(G.shape[0]))
    try:
        L0 = np.linalg.cholesky(D0)
    except np.linalg.LinAlgError as exc:
        raise NumericError("D at the freeze point is not positive definite") from exc
    M = np.broadcast_to(M0, (count,) + M0.shape).copy()
    C, n = C0, n0
    errors = np.empty((count, k, q))
    inv_qt = np.empty(k)
    out = np.empty((count, k, q))
    for j in range(k):
        try:
            n_prior = discount_df(n, beta)
        except ImproperDistributionError as exc:
            raise StepError(j + 1, exc) from exc
        a = M if identity_G else np.matmul(G, M)
        R = G @ C @ G.T / delta
        R = (R + R.T) / 2
        F = X[j]
        RF = R @ F
        qt = float(F @ RF) + V
        f = F @ a
        z = rng.standard_normal((count, q))
        zeta = rng.standard_normal((count, j))
        w = rng.chisquare(n_prior, size=count)
        # Gaussian with covariance beta * D_{j-1}, the evolved volatility scale
        g = beta ** ((j + 1) / 2) * (z @ L0.T)
        if j:
            c = np.sqrt(beta ** (j + 1 - np.arange(j)) * inv_qt[:j])
            g += np.einsum("si,siq->sq", zeta * c, errors[:, :j])
        y = f + g * np.sqrt(qt / w)[:, None]  # sqrt(qt/n) * sqrt(n/w)
        out[:, j] = y
        e = y - f
        errors[:, j] = e
        inv_qt[j] = 1.0 / qt
        A = RF / qt
        M = a + A[None, :, None] * e[:, None, :]
        C = R - np.outer(A, A) * qt
        C = (C + C.T) / 2
        n = n_prior + 1
    return out


def freeze_and_sample_paths(posterior_at_T, regressors_post, spec, S=DEFAULT_DRAWS, seed=0,
                            threads=1, model=None):
    """Sample ``S`` counterfactual paths over the post period.

    Every path evolves, forecasts, samples one ``y``, then updates on that
    sampled value before the next step, so draws keep the dependence across
    time. Draws are generated in fixed blocks of :data:`rng.CHUNK_SIZE`, each
    from its own counter-keyed stream, so ``threads`` never changes the output.
    """
    if posterior_at_T.phase != POSTERIOR:
        raise ArgumentError("sampling needs a posterior-phase state")
    if S < 1:
        raise ArgumentError(f"S must be >= 1, got {S}")
    P = posterior_at_T.params
    X = np.atleast_2d(np.asarray(regressors_post, dtype=float))
    if X.shape[1] != P.p:
        raise ArgumentError(f"post regressors have {X.shape[1]} columns, model has p={P.p}")
    if not np.all(np.isfinite(X)):
        raise DataError("post-period regressors contain non-finite values")
    label = model if model is not None else (spec.name or "")
    blocks = list(chunks(S))

    def run(block):
        i, start, stop = block
        rng = stream(seed, label, i)
        return _sample_block(P.M, P.C, P.n, P.D, X, spec, stop - start, rng)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return CounterfactualDraws(np.concatenate(parts, axis=0), seed=seed, model=label)


@dataclass(frozen=True, eq=False)
class LiftDraws:
    """Per-unit percent-lift draws (``S x q``, NaN where excluded)."""

    values: np.ndarray
    excluded: np.ndarray  # per-unit count of draws with non-positive counterfactual


def _window(window, k):
    w = np.arange(k) if window is None else np.asarray(window, dtype=int).ravel()
    if w.size == 0:
        raise ArgumentError("empty lift window")
    if w.min() < 0 or w.max() >= k:
        raise ArgumentError(f"window indices must lie in [0, {k})")
    return w


def percent_lift_per_unit(draws, observed, window=None, form="summed"):
    """``100 (observed - counterfactual) / counterfactual`` per draw and unit.

    ``form="summed"`` compares window totals; ``form="weekly"`` averages the
    week-by-week percentage lifts over the window. Draws whose counterfactual
    denominator is not positive are set to NaN and counted in ``excluded``.
    """
    Y0 = draws.draws if isinstance(draws, CounterfactualDraws) else np.asarray(draws, float)
    obs = np.asarray(observed, dtype=float)
    if obs.shape != Y0.shape[1:]:
        raise ArgumentError(f"observed has shape {obs.shape}, draws are {Y0.shape[1:]} per path")
    w = _window(window, Y0.shape[1])
    if form == "summed":
        cf = Y0[:, w, :].sum(axis=1)
        bad = cf <= 0
        with np.errstate(divide="ignore", invalid="ignore"):
            lift = 100.0 * (obs[w].sum(axis=0) - cf) / cf
    elif form == "weekly":
        cf = Y0[:, w, :]
        bad = np.any(cf <= 0, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            lift = (100.0 * (obs[w] - cf) / cf).mean(axis=1)
    else:
        raise ArgumentError(f"unknown lift form {form!r}")
    lift = np.where(bad, np.nan, lift)
    return LiftDraws(lift, bad.sum(axis=0))


def aggregate_lift(lift, mode="multivariate", seed=0):
    """Average of the per-unit lifts within each draw.

    ``mode="independent"`` first shuffles each unit's draws with its own
    stream, keeping every marginal but breaking the coupling across units.
    """
    vals = lift.values if isinstance(lift, LiftDraws) else np.asarray(lift, float)
    if mode == "multivariate":
        ok = ~np.any(np.isnan(vals), axis=1)
        return vals[ok].mean(axis=1)
    if mode == "independent":
        cols = [v[~np.isnan(v)] for v in vals.T]
        size = min(c.size for c in cols)
        shuffled = [stream(seed, "independent", j).permutation(c)[:size] for j, c in enumerate(cols)]
        return np.column_stack(shuffled).mean(axis=1)
    raise ArgumentError(f"unknown aggregation mode {mode!r}")


def percent_lift_aggregate(draws, observed, window=None, mode="multivariate", seed=0,
                           form="summed"):
    return aggregate_lift(percent_lift_per_unit(draws, observed, window, form), mode, seed)


@dataclass(frozen=True, eq=False)
class Summary:
    """Quantiles, mean and Monte Carlo standard error of one posterior sample."""

    quantiles: np.ndarray
    mean: float
    mc_se: float
    size: int

    @classmethod
    def of(cls, x):
        x = np.asarray(x, dtype=float)
        x = x[~np.isnan(x)]
        if x.size == 0:
            nan = float("nan")
            return cls(np.full(len(QUANTILES), np.nan), nan, nan, 0)
        se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("nan")
        return cls(np.quantile(x, QUANTILES), float(x.mean()), se, int(x.size))


@dataclass(frozen=True, eq=False)
class LiftSummary:
    units: tuple  # Summary per unit
    multivariate: Summary
    independent: Summary
    window: np.ndarray
    excluded: np.ndarray
    unit_ids: tuple = ()


def summarize_lift(draws, observed, window=None, form="summed", seed=0, unit_ids=None):
    lift = percent_lift_per_unit(draws, observed, window, form)
    w = _window(window, np.asarray(observed).shape[0])
    ids = tuple(unit_ids) if unit_ids is not None else tuple(str(j) for j in range(lift.values.shape[1]))
    return LiftSummary(
        units=tuple(Summary.of(v) for v in lift.values.T),
        multivariate=Summary.of(aggregate_lift(lift, "multivariate", seed)),
        independent=Summary.of(aggregate_lift(lift, "independent", seed)),
        window=w,
        excluded=lift.excluded,
        unit_ids=ids,
    )


def counterfactual_correlation(draws, window=None):
    """Correlation across draws of each unit's counterfactual window total.

    Units whose totals do not vary get NaN off-diagonal entries.
    """
    if draws.S < 2:
        raise ArgumentError("need at least two draws for a correlation")
    w = _window(window, draws.k)
    tot = draws.draws[:, w, :].sum(axis=1)
    cen = tot - tot.mean(axis=0)
    ss = np.sum(cen * cen, axis=0)
    defined = np.sqrt(ss) > 1e-12 * np.maximum(1.0, np.abs(tot).max(axis=0))
    safe = np.where(defined, ss, 1.0)
    # sqrt(ss_i * ss_j) rather than sd_i * sd_j keeps duplicated units at exactly 1
    corr = (cen.T @ cen) / np.sqrt(np.outer(safe, safe))
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    undefined = ~np.outer(defined, defined)
    corr[undefined] = np.nan
    np.fill_diagonal(corr, 1.0)
    return corr

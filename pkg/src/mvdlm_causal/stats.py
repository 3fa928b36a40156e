"""Matrix-variate distribution primitives.

Inverse-Wishart convention
--------------------------
``NIWParams(M, C, n, D)`` means

    Sigma^{-1} ~ Wishart(n + q - 1, D^{-1}),    Theta | Sigma ~ MN(M, C, Sigma)

so that ``n`` is the degrees of freedom of every implied Student-t (marginal
or one-step predictive), ``D / n`` is the point estimate of ``Sigma`` and, for
``q = 1``, ``E[Sigma] = D / (n - 2)``. The distribution is proper iff ``n > 0``.

Volatility discounting acts on ``n`` directly (``n -> beta * n``), so each
series' marginal recursion is exactly the univariate discount DLM. All df
arithmetic goes through :func:`wishart_df` and :func:`discount_df`.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import ArgumentError, ImproperDistributionError, NumericError
from .rng import stream

SYM_TOL = 1e-10
JITTER = 1e-10


def wishart_df(n, q):
    """Wishart degrees of freedom ``h`` of ``Sigma^{-1}`` for marginal df ``n``."""
    return n + q - 1


def discount_df(n, beta):
    """Prior degrees of freedom after one volatility-discount step."""
    n_prior = beta * n
    if not n_prior > 0:
        raise ImproperDistributionError(
            f"evolved degrees of freedom {n_prior:.6g} <= 0 (n={n:.6g}, beta={beta})"
        )
    return n_prior


def _scale(a):
    return max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0


def check_spd(a, name="matrix"):
    """Validate that ``a`` is a symmetric positive-definite matrix; return it as float array."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{name} has non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > SYM_TOL * _scale(a):
        raise NumericError(f"{name} is not symmetric")
    if a.size and np.min(np.diag(a)) <= 0:
        raise NumericError(f"{name} is not positive definite (non-positive diagonal)")
    cholesky(a, name)
    return a


def cholesky(a, name="matrix"):
    """Lower Cholesky factor with a single round-off jitter retry.

    A matrix whose smallest eigenvalue is above ``-1e-10`` (relative to its
    largest entry) gets ``1e-10 * I`` added once; anything worse raises
    :class:`NumericError` naming the matrix.
    """
    a = np.asarray(a, dtype=float)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    s = _scale(a)
    min_eig = np.linalg.eigvalsh((a + a.T) / 2)[0]
    if min_eig > -JITTER * s:
        try:
            return np.linalg.cholesky(a + JITTER * s * np.eye(a.shape[0]))
        except np.linalg.LinAlgError:
            pass
    raise NumericError(f"{name} is not positive definite (min eigenvalue {min_eig:.3g})")


@dataclass(frozen=True, eq=False)
class MultivariateT:
    """Multivariate Student-t with ``df`` degrees of freedom, location and scale matrix."""

    df: float
    location: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.df) or self.df <= 0:
            raise ArgumentError(f"df must be positive, got {self.df}")
        loc = np.atleast_1d(np.asarray(self.location, dtype=float))
        scale = np.atleast_2d(np.asarray(self.scale, dtype=float))
        if loc.ndim != 1 or scale.shape != (loc.size, loc.size):
            raise ArgumentError(
                f"location of length {loc.size} does not match scale of shape {scale.shape}"
            )
        check_spd(scale, "scale")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "_chol", cholesky(scale, "scale"))

    @property
    def dim(self):
        return self.location.size

    @property
    def cov(self):
        if self.df <= 2:
            return np.full_like(self.scale, np.inf)
        return self.scale * self.df / (self.df - 2)


def mvt_log_density(dist, y):
    """Log density of ``dist`` at ``y``; ``y`` may be a vector or an ``(n, q)`` batch."""
    y = np.asarray(y, dtype=float)
    q = dist.dim
    if y.shape[-1:] != (q,) or y.ndim > 2:
        raise ArgumentError(f"y has shape {y.shape}, expected (..., {q})")
    L = dist._chol
    z = linalg.solve_triangular(L, (y - dist.location).T, lower=True)
    maha = np.sum(z * z, axis=0)
    nu = dist.df
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    out = (
        special.gammaln((nu + q) / 2)
        - special.gammaln(nu / 2)
        - 0.5 * q * np.log(nu * np.pi)
        - 0.5 * log_det
        - 0.5 * (nu + q) * np.log1p(maha / nu)
    )
    return float(out) if y.ndim == 1 else out


def mvt_sample(dist, count, seed):
    """Draw ``count`` samples as a ``(count, q)`` array; deterministic in ``seed``."""
    if count < 1:
        raise ArgumentError(f"count must be >= 1, got {count}")
    rng = stream(seed)
    z = rng.standard_normal((count, dist.dim))
    w = rng.chisquare(dist.df, size=count)
    return dist.location + (z @ dist._chol.T) * np.sqrt(dist.df / w)[:, None]


@dataclass(frozen=True, eq=False)
class NIWParams:
    """Matrix normal / inverse-Wishart parameters ``(M, C, n, D)``.

    ``M`` is ``p x q``, ``C`` is the ``p x p`` left (row) scale, ``D`` the
    ``q x q`` inverse-Wishart scale and ``n`` the marginal degrees of freedom.
    """

    M: np.ndarray
    C: np.ndarray
    n: float
    D: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        p, q = M.shape
        if C.shape != (p, p):
            raise ArgumentError(f"C has shape {C.shape}, expected {(p, p)}")
        if D.shape != (q, q):
            raise ArgumentError(f"D has shape {D.shape}, expected {(q, q)}")
        if not np.all(np.isfinite(M)):
            raise NumericError("M has non-finite entries")
        check_spd(C, "C")
        check_spd(D, "D")
        if not self.n > 0:
            raise ImproperDistributionError(
                f"degrees of freedom n={self.n} must be > 0 "
                f"(Wishart df n+q-1={wishart_df(self.n, q)} must exceed q-1={q - 1})"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "n", float(self.n))

    @property
    def p(self):
        return self.M.shape[0]

    @property
    def q(self):
        return self.M.shape[1]

    def column(self, j):
        """Scalar-variance marginal for series ``j``: ``(m, C, n, d)``."""
        return self.M[:, j].copy(), self.C.copy(), self.n, float(self.D[j, j])


def sample_inverse_wishart(n, D, count, rng):
    """``count`` draws of Sigma with ``Sigma^{-1} ~ W(n + q - 1, D^{-1})`` (Bartlett)."""
    q = D.shape[0]
    h = wishart_df(n, q)
    U = cholesky(D, "D")
    out = np.empty((count, q, q))
    il = np.tril_indices(q, -1)
    for s in range(count):
        A = np.zeros((q, q))
        A[np.diag_indices(q)] = np.sqrt(rng.chisquare(h - np.arange(q)))
        A[il] = rng.standard_normal(len(il[0]))
        # Sigma = (U A^{-T})(U A^{-T})'
        K = linalg.solve_triangular(A, U.T, lower=True).T
        out[s] = K @ K.T
    return out


def niw_sample(params, count, seed):
    """Joint draws ``[(Theta, Sigma), ...]`` from an NIW distribution."""
    if count < 1:
        raise ArgumentError(f"count must be >= 1, got {count}")
    rng = stream(seed)
    sigmas = sample_inverse_wishart(params.n, params.D, count, rng)
    Lc = cholesky(params.C, "C")
    p, q = params.M.shape
    out = []
    for S in sigmas:
        Z = rng.standard_normal((p, q))
        theta = params.M + Lc @ Z @ cholesky(S, "Sigma").T
        out.append((theta, S))
    return out

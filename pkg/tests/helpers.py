"""Random inputs shared by the test modules."""
import numpy as np

from mvdlm_causal import NIWParams


def random_spd(rng, d, scale=1.0):
    A = rng.standard_normal((d, d))
    return scale * (A @ A.T / d + 0.5 * np.eye(d))


def random_panel(rng, T, p, q):
    """Regressors with an intercept column and outcomes from a random linear model."""
    X = np.column_stack([np.ones(T), rng.standard_normal((T, p - 1))]) if p > 1 else np.ones((T, 1))
    theta = rng.standard_normal((p, q))
    Y = X @ theta + rng.standard_normal((T, q)) @ np.linalg.cholesky(random_spd(rng, q)).T
    return Y, X


def random_prior(rng, p, q, n=None):
    return NIWParams(
        rng.standard_normal((p, q)),
        random_spd(rng, p, 2.0),
        float(q + 3 if n is None else n),
        random_spd(rng, q, 3.0),
    )

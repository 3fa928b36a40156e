import math

import numpy as np
import pytest
from scipy import integrate
from scipy import stats as sps

from mvdlm_causal import (
    ArgumentError,
    ImproperDistributionError,
    MultivariateT,
    NIWParams,
    NumericError,
    mvt_log_density,
    mvt_sample,
    niw_sample,
)
from mvdlm_causal.stats import check_spd, cholesky
from tests.helpers import random_spd


def univariate_t_logpdf(x, df, loc, scale):
    # textbook Student-t density, written out independently
    z = (x - loc) / math.sqrt(scale)
    return (math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi * scale)
            - (df + 1) / 2 * math.log1p(z * z / df))


class TestLogDensity:
    def test_univariate_t5_at_zero(self):
        expected = math.lgamma(3) - math.lgamma(2.5) - 0.5 * math.log(5 * math.pi)
        got = mvt_log_density(MultivariateT(5, [0.0], [[1.0]]), [0.0])
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(-0.968620, abs=1e-6)

    def test_bivariate_against_reference(self):
        dist = MultivariateT(4, [0.0, 0.0], np.eye(2))
        ref = sps.multivariate_t(loc=[0, 0], shape=np.eye(2), df=4).logpdf([1, 1])
        assert mvt_log_density(dist, [1.0, 1.0]) == pytest.approx(ref, abs=1e-8)

    def test_mode_at_location(self, rng):
        dist = MultivariateT(3.5, [1.0, -2.0, 0.5], np.diag([1.0, 2.0, 0.5]))
        top = mvt_log_density(dist, dist.location)
        for _ in range(50):
            y = dist.location + rng.standard_normal(3)
            assert mvt_log_density(dist, y) < top

    def test_integrates_to_one_q1(self):
        dist = MultivariateT(3.0, [0.7], [[2.5]])
        val, _ = integrate.quad(lambda x: math.exp(mvt_log_density(dist, [x])), -np.inf, np.inf)
        assert val == pytest.approx(1.0, abs=1e-8)

    def test_batch_matches_loop(self, rng):
        dist = MultivariateT(6.0, [0.0, 1.0], [[2.0, 0.3], [0.3, 1.0]])
        Y = rng.standard_normal((7, 2))
        np.testing.assert_allclose(mvt_log_density(dist, Y),
                                   [mvt_log_density(dist, y) for y in Y], rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ArgumentError):
            mvt_log_density(MultivariateT(5, [0.0, 0.0], np.eye(2)), [1.0, 2.0, 3.0])

    def test_non_spd_scale_names_matrix(self):
        with pytest.raises(NumericError, match="scale"):
            MultivariateT(5, [0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])


class TestSampling:
    def test_mean_converges(self):
        dist = MultivariateT(10, [3.0], [[2.0]])
        x = mvt_sample(dist, 200_000, seed=11)[:, 0]
        se = math.sqrt(2.0 * 10 / 8 / x.size)
        assert abs(x.mean() - 3.0) < 3 * se

    def test_covariance_converges(self):
        scale = np.array([[2.0, 0.6], [0.6, 1.0]])
        x = mvt_sample(MultivariateT(8, [0.0, 0.0], scale), 200_000, seed=5)
        np.testing.assert_allclose(np.cov(x.T), scale * 8 / 6, rtol=0.03)

    def test_deterministic(self):
        dist = MultivariateT(4, [0.0, 1.0], np.eye(2))
        assert np.array_equal(mvt_sample(dist, 100, 7), mvt_sample(dist, 100, 7))
        assert not np.array_equal(mvt_sample(dist, 100, 7), mvt_sample(dist, 100, 8))

    def test_zero_scale_rejected(self):
        with pytest.raises(NumericError):
            MultivariateT(4, [0.0], [[0.0]])

    def test_bad_df_and_count(self):
        with pytest.raises(ArgumentError):
            MultivariateT(0, [0.0], [[1.0]])
        with pytest.raises(ArgumentError):
            mvt_sample(MultivariateT(3, [0.0], [[1.0]]), 0, 1)

    def test_q1_matches_scalar_t(self):
        x = mvt_sample(MultivariateT(7, [1.0], [[4.0]]), 100_000, seed=2)[:, 0]
        ks = sps.kstest(x, sps.t(df=7, loc=1.0, scale=2.0).cdf)
        assert ks.pvalue > 1e-3


class TestNIW:
    def test_inverse_gamma_mean(self):
        draws = niw_sample(NIWParams([[0.0]], [[1.0]], 10, [[8.0]]), 20_000, seed=3)
        sig = np.array([s[0, 0] for _, s in draws])
        mean = 8.0 / 8
        sd = mean / math.sqrt(10 / 2 - 2)  # inverse-gamma(5, 4) standard deviation
        assert abs(sig.mean() - mean) < 3 * sd / math.sqrt(sig.size)

    def test_inverse_wishart_mean(self, rng):
        D = random_spd(rng, 3)
        n = 12.0
        draws = niw_sample(NIWParams(np.zeros((1, 3)), [[1.0]], n, D), 20_000, seed=9)
        mean = np.mean([s for _, s in draws], axis=0)
        np.testing.assert_allclose(mean, D / (n - 2), rtol=0.05, atol=0.01)

    def test_degenerate_state_collapses(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        P = NIWParams(M, 1e-12 * np.eye(2), 6, np.eye(2))
        for theta, _ in niw_sample(P, 200, seed=1):
            assert np.max(np.abs(theta - M)) < 1e-4

    def test_sigma_draws_spd(self, rng):
        P = NIWParams(np.zeros((2, 4)), np.eye(2), 1.5, random_spd(rng, 4))
        for _, S in niw_sample(P, 1000, seed=4):
            check_spd(S)

    def test_theta_conditional_law(self):
        # Theta | Sigma ~ MN(M, C, Sigma): Theta[i, j] has variance C_ii Sigma_jj
        C = np.array([[2.0, 0.5], [0.5, 1.0]])
        P = NIWParams(np.zeros((2, 1)), C, 8, [[6.0]])
        draws = niw_sample(P, 20_000, seed=21)
        z = np.array([th[:, 0] / math.sqrt(s[0, 0]) for th, s in draws])
        np.testing.assert_allclose(np.cov(z.T), C, rtol=0.05, atol=0.02)

    def test_improper_rejected(self):
        with pytest.raises(ImproperDistributionError):
            NIWParams(np.zeros((1, 2)), [[1.0]], 0.0, np.eye(2))

    def test_deterministic(self):
        P = NIWParams(np.zeros((2, 2)), np.eye(2), 5, np.eye(2))
        a, b = niw_sample(P, 5, 13), niw_sample(P, 5, 13)
        assert all(np.array_equal(x[0], y[0]) and np.array_equal(x[1], y[1]) for x, y in zip(a, b))


class TestCholesky:
    def test_roundoff_jitter(self):
        v = np.array([1.0, 1.0])
        A = np.outer(v, v)  # singular, min eigenvalue 0
        L = cholesky(A)
        np.testing.assert_allclose(L @ L.T, A, atol=1e-9)

    def test_negative_fails_loudly(self):
        with pytest.raises(NumericError, match="R"):
            cholesky(-np.eye(2), "R")

    def test_asymmetric_rejected(self):
        with pytest.raises(NumericError, match="symmetric"):
            check_spd(np.array([[1.0, 0.2], [0.0, 1.0]]))

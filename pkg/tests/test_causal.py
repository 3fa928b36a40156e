import numpy as np
import pytest

from mvdlm_causal import (
    ArgumentError,
    CounterfactualDraws,
    ModelSpec,
    NIWParams,
    StudyDesign,
    aggregate_lift,
    counterfactual_correlation,
    freeze_and_sample_paths,
    percent_lift_aggregate,
    percent_lift_per_unit,
    summarize_lift,
)
from mvdlm_causal import mvt_sample
from mvdlm_causal.filter import evolve, forecast_one_step, update
from tests.helpers import random_prior


def posterior(P):
    return ModelSpec(P).initial_state()


class TestPaths:
    def test_one_step_matches_forecast(self, rng):
        P = random_prior(rng, 2, 2, n=9)
        spec = ModelSpec(P, 0.95, 0.9)
        F = np.array([1.0, 0.5])
        d = freeze_and_sample_paths(posterior(P), F[None, :], spec, S=200_000, seed=1)
        fc = forecast_one_step(evolve(spec.initial_state(), spec), F, spec)
        x = d.draws[:, 0, :]
        se = np.sqrt(np.diag(fc.cov) / x.shape[0])
        assert np.all(np.abs(x.mean(0) - fc.location) < 4 * se)
        np.testing.assert_allclose(np.cov(x.T), fc.cov, rtol=0.05)

    def test_martingale_mean(self, rng):
        P = random_prior(rng, 2, 3, n=12)
        spec = ModelSpec(P, 1.0, 1.0)
        F = np.array([1.0, -0.7])
        d = freeze_and_sample_paths(posterior(P), np.tile(F, (8, 1)), spec, S=10_000, seed=2)
        target = P.M.T @ F
        se = d.draws.std(axis=0, ddof=1) / np.sqrt(d.S)
        assert np.all(np.abs(d.draws.mean(0) - target) < 3.5 * se)

    def test_matches_stepwise_reference(self, rng):
        # reference: one path at a time through the public filter steps
        P = random_prior(rng, 2, 3, n=8)
        spec = ModelSpec(P, 0.95, 0.9)
        X = np.column_stack([np.ones(5), rng.standard_normal(5)])
        ref = []
        for i in range(3000):
            state, path = spec.initial_state(), []
            path_rng = np.random.default_rng([77, i])
            for F in X:
                prior = evolve(state, spec)
                y = mvt_sample(forecast_one_step(prior, F, spec), 1, seed=path_rng)[0]
                path.append(y)
                state = update(prior, F, y, spec)
            ref.append(path)
        ref = np.asarray(ref)
        fast = freeze_and_sample_paths(posterior(P), X, spec, S=30_000, seed=5).draws
        for arr in (ref, fast):
            assert arr.shape[1:] == (5, 3)
        ref_tot, fast_tot = ref.sum(1), fast.sum(1)
        se = ref_tot.std(0) / np.sqrt(ref_tot.shape[0])
        assert np.all(np.abs(ref_tot.mean(0) - fast_tot.mean(0)) < 4 * se)
        np.testing.assert_allclose(fast_tot.var(0), ref_tot.var(0), rtol=0.15)
        np.testing.assert_allclose(np.corrcoef(fast_tot.T), np.corrcoef(ref_tot.T), atol=0.08)
        # step-to-step covariance of the last two steps
        steps = lambda a: np.corrcoef(a[:, :, 0].T)
        np.testing.assert_allclose(steps(fast), steps(ref), atol=0.08)

    def test_thread_count_irrelevant(self, rng):
        P = random_prior(rng, 2, 2)
        X = np.column_stack([np.ones(5), rng.standard_normal(5)])
        spec = ModelSpec(P)
        a = freeze_and_sample_paths(posterior(P), X, spec, S=3000, seed=9, threads=1)
        b = freeze_and_sample_paths(posterior(P), X, spec, S=3000, seed=9, threads=8)
        assert np.array_equal(a.draws, b.draws)
        c = freeze_and_sample_paths(posterior(P), X, spec, S=3000, seed=10)
        assert not np.array_equal(a.draws, c.draws)

    def test_prefix_stability(self, rng):
        P = random_prior(rng, 1, 2)
        X = np.ones((3, 1))
        a = freeze_and_sample_paths(posterior(P), X, ModelSpec(P), S=1024, seed=4)
        b = freeze_and_sample_paths(posterior(P), X, ModelSpec(P), S=2048, seed=4)
        assert np.array_equal(a.draws, b.draws[:1024])

    def test_time_dependence_kept(self, rng):
        # with no state discount, later steps learn from earlier sampled values
        P = NIWParams([[0.0]], [[4.0]], 10.0, [[1.0]])
        d = freeze_and_sample_paths(posterior(P), np.ones((2, 1)), ModelSpec(P, 1.0, 1.0),
                                    S=20_000, seed=3)
        assert np.corrcoef(d.draws[:, 0, 0], d.draws[:, 1, 0])[0, 1] > 0.5

    def test_validation(self, rng):
        P = random_prior(rng, 2, 2)
        spec = ModelSpec(P)
        with pytest.raises(ArgumentError):
            freeze_and_sample_paths(posterior(P), np.ones((3, 3)), spec, S=10)
        with pytest.raises(ArgumentError):
            freeze_and_sample_paths(evolve(posterior(P), spec), np.ones((3, 2)), spec, S=10)
        with pytest.raises(ArgumentError):
            freeze_and_sample_paths(posterior(P), np.ones((3, 2)), spec, S=0)


class TestLift:
    def test_null_effect(self, rng):
        d = CounterfactualDraws(np.tile(50 + rng.random((1, 4, 3)), (20, 1, 1)))
        lift = percent_lift_per_unit(d, d.draws[0])
        assert np.all(lift.values == 0)

    def test_proportional_effect(self, rng):
        # each draw is observed / 1.1, so every draw sees exactly +10%
        obs = 10 + rng.random((4, 3))
        d = CounterfactualDraws(np.tile(obs / 1.1, (30, 1, 1)))
        for form in ("summed", "weekly"):
            v = percent_lift_per_unit(d, obs, form=form).values
            np.testing.assert_allclose(v, 10.0, rtol=1e-12)
            assert np.ptp(v) < 1e-12

    def test_summed_vs_weekly(self):
        d = CounterfactualDraws(np.array([[[100.0], [300.0]]]))
        obs = np.array([[110.0], [300.0]])
        assert percent_lift_per_unit(d, obs).values[0, 0] == pytest.approx(2.5)
        assert percent_lift_per_unit(d, obs, form="weekly").values[0, 0] == pytest.approx(5.0)

    def test_non_positive_denominator_excluded(self):
        draws = np.ones((5, 2, 2))
        draws[1, :, 0] = -1.0
        draws[3, 0, 1] = -5.0
        lift = percent_lift_per_unit(CounterfactualDraws(draws), np.ones((2, 2)))
        assert lift.excluded.tolist() == [1, 1]
        assert np.isnan(lift.values[1, 0]) and np.isnan(lift.values[3, 1])
        assert aggregate_lift(lift).size == 3
        assert aggregate_lift(lift, "independent").size == 4

    def test_window_validation(self):
        d = CounterfactualDraws(np.ones((2, 3, 1)))
        for w in ([], [3], [-1]):
            with pytest.raises(ArgumentError):
                percent_lift_per_unit(d, np.ones((3, 1)), window=w)
        with pytest.raises(ArgumentError):
            percent_lift_per_unit(d, np.ones((2, 1)))
        with pytest.raises(ArgumentError):
            percent_lift_per_unit(d, np.ones((3, 1)), form="monthly")

    def test_scale_invariance(self, rng):
        d = CounterfactualDraws(100 + rng.standard_normal((50, 4, 3)))
        obs = 105 + rng.standard_normal((4, 3))
        a = percent_lift_per_unit(d, obs).values
        b = percent_lift_per_unit(CounterfactualDraws(4.0 * d.draws), 4.0 * obs).values
        np.testing.assert_allclose(a, b, rtol=1e-13)

    def test_single_step_window(self, rng):
        d = CounterfactualDraws(100 + rng.standard_normal((50, 4, 3)))
        obs = 100 + rng.standard_normal((4, 3))
        a = percent_lift_per_unit(d, obs, window=[2]).values
        np.testing.assert_allclose(a, 100 * (obs[2] - d.draws[:, 2]) / d.draws[:, 2])
        np.testing.assert_allclose(a, percent_lift_per_unit(d, obs, [2], form="weekly").values)


class TestAggregation:
    def test_modes_share_marginals(self, rng):
        lift = rng.standard_normal((500, 1))
        ind = aggregate_lift(lift, "independent", seed=2)
        assert np.array_equal(np.sort(ind), np.sort(lift[:, 0]))
        lift = rng.standard_normal((500, 5))
        mv, ind = aggregate_lift(lift), aggregate_lift(lift, "independent", seed=2)
        assert mv.mean() == pytest.approx(ind.mean(), abs=1e-12)

    def test_multivariate_variance_identity(self, rng):
        lift = rng.standard_normal((2000, 4)) @ rng.standard_normal((4, 4))
        agg = aggregate_lift(lift)
        cov = np.cov(lift.T)
        assert agg.var(ddof=1) == pytest.approx(cov.sum() / 16, rel=1e-10)

    def test_independent_fixed_point(self, rng):
        lift = rng.standard_normal((20_000, 8))
        mv, ind = aggregate_lift(lift), aggregate_lift(lift, "independent", seed=1)
        w = lambda x: np.subtract(*np.quantile(x, [0.975, 0.025]))
        assert w(mv) / w(ind) == pytest.approx(1.0, abs=0.05)

    def test_equicorrelated_inflation(self, rng):
        q, rho = 16, 0.5
        cov = (1 - rho) * np.eye(q) + rho
        lift = rng.standard_normal((40_000, q)) @ np.linalg.cholesky(cov).T
        mv, ind = aggregate_lift(lift), aggregate_lift(lift, "independent", seed=1)
        w = lambda x: np.subtract(*np.quantile(x, [0.975, 0.025]))
        assert w(mv) / w(ind) == pytest.approx(np.sqrt(1 + (q - 1) * rho), rel=0.15)

    def test_unknown_mode(self):
        with pytest.raises(ArgumentError):
            aggregate_lift(np.ones((3, 2)), "pooled")

    def test_summary_quantiles_ordered(self, rng):
        d = CounterfactualDraws(100 + rng.standard_normal((400, 5, 3)))
        obs = 102 + rng.standard_normal((5, 3))
        s = summarize_lift(d, obs, window=[2, 3, 4], unit_ids=["a", "b", "c"])
        for summ in (*s.units, s.multivariate, s.independent):
            assert summ.quantiles[0] <= summ.quantiles[1] <= summ.quantiles[2]
            assert summ.mc_se > 0 and summ.size == 400
        assert s.unit_ids == ("a", "b", "c") and s.window.tolist() == [2, 3, 4]
        np.testing.assert_allclose(
            s.multivariate.mean, percent_lift_aggregate(d, obs, [2, 3, 4]).mean())


class TestCorrelation:
    def test_duplicated_units(self, rng):
        x = 100 + rng.standard_normal((300, 4, 1))
        c = counterfactual_correlation(CounterfactualDraws(np.concatenate([x, x, 2 * x], axis=2)))
        assert np.all(c == 1.0)

    def test_independent_units(self, rng):
        S = 5000
        c = counterfactual_correlation(CounterfactualDraws(rng.standard_normal((S, 3, 6))))
        off = c[~np.eye(6, dtype=bool)]
        assert np.all(np.abs(off) < 3 / np.sqrt(S))

    def test_symmetric_unit_diagonal(self, rng):
        c = counterfactual_correlation(CounterfactualDraws(rng.standard_normal((50, 2, 5))), [0])
        assert np.array_equal(c, c.T) and np.all(np.diag(c) == 1.0)

    def test_constant_unit_undefined(self, rng):
        x = rng.standard_normal((50, 2, 3))
        x[:, :, 1] = 7.0
        c = counterfactual_correlation(CounterfactualDraws(x))
        assert np.isnan(c[0, 1]) and np.isnan(c[1, 2]) and not np.isnan(c[0, 2])
        assert c[1, 1] == 1.0

    def test_needs_two_draws(self):
        with pytest.raises(ArgumentError):
            counterfactual_correlation(CounterfactualDraws(np.ones((1, 2, 2))))


class TestDesign:
    def test_windows(self):
        d = StudyDesign(52, 8, 24)
        assert d.evaluation.tolist() == list(range(8, 24))
        assert d.post.size == 24

    @pytest.mark.parametrize("args", [(52, 8, 8), (52, -1, 4), (1, 0, 2)])
    def test_invalid(self, args):
        with pytest.raises(ArgumentError):
            StudyDesign(*args)

    def test_draws_validated(self):
        with pytest.raises(ArgumentError):
            CounterfactualDraws(np.ones((0, 2, 2)))
        with pytest.raises(Exception):
            CounterfactualDraws(np.full((1, 1, 1), np.nan))

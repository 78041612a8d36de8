import math

import numpy as np
import pytest

from rffkit import (
    FeatureStyle,
    NumericalError,
    SamplingScheme,
    WeightedFeatureSet,
    approx_leverage_sample,
    approx_gram,
    build_feature_matrix,
    effective_dof,
    exact_leverage_scores,
    feature_matrix,
    gaussian_kernel,
    gram_matrix,
    sample_exact_leverage,
    sample_plain,
    spectral_sample,
    spline_kernel,
)


@pytest.fixture
def spline_problem():
    rng = np.random.default_rng(11)
    spec = spline_kernel(2, truncation=100)
    x = rng.random((60, 1))
    return spec, x


class TestWeightedFeatureSet:
    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ValueError):
            WeightedFeatureSet(np.ones((3, 1)), np.array([1.0, 0.0, 1.0]), SamplingScheme.PLAIN)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            WeightedFeatureSet(np.ones((3, 1)), np.ones(2), SamplingScheme.PLAIN)


class TestBuildFeatureMatrix:
    def test_single_unit_column(self):
        spec = gaussian_kernel(1.0, dim=2)
        fset = WeightedFeatureSet(np.zeros((1, 2)), np.ones(1), SamplingScheme.PLAIN)
        z = build_feature_matrix(fset, spec, np.array([[0.3, 0.7], [1.0, -1.0]]))
        np.testing.assert_array_equal(z.values, np.ones((2, 1)))

    def test_plain_gram_approximation_error(self):
        # Monte-Carlo error of the approximate Gram at s = 4000, z0 = sqrt(2)
        rng = np.random.default_rng(12)
        spec = gaussian_kernel(1.0, dim=2)
        x = rng.standard_normal((50, 2))
        fset = sample_plain(spec, 4000, rng)
        k_tilde = approx_gram(build_feature_matrix(fset, spec, x))
        k = gram_matrix(spec, x)
        assert np.abs(k_tilde - k).max() <= 0.08

    def test_doubled_weights_quadruple_gram(self):
        rng = np.random.default_rng(13)
        spec = gaussian_kernel(1.0, dim=1)
        freqs = spectral_sample(spec, rng, 8)
        x = rng.standard_normal((10, 1))
        base = WeightedFeatureSet(freqs, np.full(8, 1.5), SamplingScheme.PLAIN)
        doubled = WeightedFeatureSet(freqs, np.full(8, 3.0), SamplingScheme.PLAIN)
        k1 = approx_gram(build_feature_matrix(base, spec, x))
        k2 = approx_gram(build_feature_matrix(doubled, spec, x))
        np.testing.assert_array_equal(k2, 4.0 * k1)

    def test_pair_style_has_two_columns_per_frequency(self):
        spec = gaussian_kernel(1.0, dim=1, feature_style=FeatureStyle.COS_SIN_PAIR)
        rng = np.random.default_rng(14)
        fset = sample_plain(spec, 5, rng)
        z = build_feature_matrix(fset, spec, rng.standard_normal((7, 1)))
        assert z.values.shape == (7, 10)


class TestApproxGram:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(approx_gram(np.zeros((4, 2))), np.zeros((4, 4)))

    def test_unbiased_over_draws(self):
        rng = np.random.default_rng(15)
        spec = gaussian_kernel(1.0, dim=1)
        x = rng.standard_normal((12, 1))
        k = gram_matrix(spec, x)
        draws = 200
        stack = np.empty((draws, 12, 12))
        for i in range(draws):
            fset = sample_plain(spec, 50, np.random.default_rng(1000 + i))
            stack[i] = approx_gram(build_feature_matrix(fset, spec, x))
        mean = stack.mean(axis=0)
        se = stack.std(axis=0, ddof=1) / math.sqrt(draws)
        # 144 correlated entries: allow the usual multiplicity slack on top
        # of the entrywise three-sigma band
        assert np.all(np.abs(mean - k) <= 4.0 * se + 1e-12)
        within3 = np.mean(np.abs(mean - k) <= 3.0 * se + 1e-12)
        assert within3 >= 0.97

    def test_rank_bounded_by_columns(self):
        rng = np.random.default_rng(16)
        z = rng.standard_normal((20, 6))
        eigs = np.linalg.eigvalsh(approx_gram(z))
        assert np.sum(eigs > 1e-10) <= 6


class TestEffectiveDof:
    def test_scaled_identity(self):
        n, c, lam = 30, 2.5, 0.1
        k = c * np.eye(n)
        assert effective_dof(k, lam, n) == pytest.approx(n * c / (c + n * lam), rel=1e-12)

    def test_vanishes_for_large_lambda(self):
        rng = np.random.default_rng(17)
        a = rng.standard_normal((20, 20))
        k = a @ a.T
        values = [effective_dof(k, lam, 20) for lam in (0.1, 1.0, 10.0, 1e4)]
        assert all(values[i] > values[i + 1] for i in range(3))
        assert values[-1] < 1e-2

    def test_eigen_form_matches_solve_form(self):
        rng = np.random.default_rng(18)
        a = rng.standard_normal((25, 25))
        k = a @ a.T
        lam, n = 0.05, 25
        direct = np.trace(k @ np.linalg.solve(k + n * lam * np.eye(n), np.eye(n)))
        assert abs(effective_dof(k, lam, n) - direct) < 1e-10

    def test_monotone_in_lambda(self):
        rng = np.random.default_rng(19)
        x = rng.random((40, 1))
        k = gram_matrix(spline_kernel(2, truncation=50), x)
        grid = np.logspace(-4, 1, 12)
        dofs = [effective_dof(k, lam, 40) for lam in grid]
        assert all(dofs[i] > dofs[i + 1] for i in range(len(grid) - 1))

    def test_rejects_non_psd(self):
        k = np.diag([1.0, -1.0])
        with pytest.raises(NumericalError):
            effective_dof(k, 0.1, 2)


class TestExactLeverageScores:
    def test_mean_score_estimates_dof(self, spline_problem):
        spec, x = spline_problem
        lam = 0.05
        pool = sample_plain(spec, 4000, np.random.default_rng(20))
        profile = exact_leverage_scores(spec, x, pool, lam)
        dof = effective_dof(gram_matrix(spec, x), lam, x.shape[0])
        se = profile.scores.std(ddof=1) / math.sqrt(pool.size)
        assert abs(profile.scores.mean() - dof) < 3 * se
        assert profile.dof == pytest.approx(dof, abs=1e-8)

    def test_score_bound(self, spline_problem):
        spec, x = spline_problem
        lam = 0.05
        pool = sample_plain(spec, 500, np.random.default_rng(21))
        profile = exact_leverage_scores(spec, x, pool, lam)
        assert profile.scores.max() <= spec.z0**2 / lam
        assert np.all(profile.scores >= 0)

    def test_scores_vanish_for_huge_lambda(self, spline_problem):
        spec, x = spline_problem
        pool = sample_plain(spec, 50, np.random.default_rng(22))
        profile = exact_leverage_scores(spec, x, pool, 1e9)
        assert profile.scores.max() < 1e-6

    def test_woodbury_path_matches_direct(self):
        # n above the factor width exercises the Woodbury branch
        rng = np.random.default_rng(23)
        spec = spline_kernel(2, truncation=20)
        x = rng.random((120, 1))
        pool = sample_plain(spec, 64, np.random.default_rng(24))
        lam, n = 0.03, 120
        profile = exact_leverage_scores(spec, x, pool, lam)
        k = gram_matrix(spec, x)
        z = feature_matrix(spec, pool.frequencies, x)
        direct = np.einsum("ij,ij->j", z, np.linalg.solve(k + n * lam * np.eye(n), z))
        np.testing.assert_allclose(profile.scores, direct, atol=1e-8)

    def test_rejects_weighted_pool(self, spline_problem):
        spec, x = spline_problem
        fset = WeightedFeatureSet(np.full((4, 1), 0.2), np.full(4, 2.0), SamplingScheme.PLAIN)
        with pytest.raises(ValueError):
            exact_leverage_scores(spec, x, fset, 0.1)


class TestSampleExactLeverage:
    def test_equal_scores_give_unit_weights(self):
        # all points coincide, so every frequency scores identically
        spec = gaussian_kernel(1.0, dim=1)
        x = np.zeros((5, 1))
        fset = sample_exact_leverage(spec, x, 0.1, 10, 40, np.random.default_rng(25))
        np.testing.assert_allclose(fset.weights, 1.0, rtol=1e-9)

    def test_deterministic(self, spline_problem):
        spec, x = spline_problem
        a = sample_exact_leverage(spec, x, 0.05, 12, 100, np.random.default_rng(26))
        b = sample_exact_leverage(spec, x, 0.05, 12, 100, np.random.default_rng(26))
        np.testing.assert_array_equal(a.frequencies, b.frequencies)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_resampling_unbiased_for_pool_gram(self, spline_problem):
        spec, x = spline_problem
        lam, pool_size, s = 0.05, 600, 25
        pool = sample_plain(spec, pool_size, np.random.default_rng(27))
        k_pool = approx_gram(build_feature_matrix(pool, spec, x))
        profile = exact_leverage_scores(spec, x, pool, lam)
        probs = profile.scores / profile.total
        draws = 300
        acc = np.zeros_like(k_pool)
        acc_sq = np.zeros_like(k_pool)
        for i in range(draws):
            rng = np.random.default_rng(3000 + i)
            idx = rng.choice(pool_size, size=s, replace=True, p=probs)
            weights = np.sqrt((1.0 / pool_size) / probs[idx])
            fset = WeightedFeatureSet(
                pool.frequencies[idx], weights, SamplingScheme.EXACT_LEVERAGE
            )
            k_i = approx_gram(build_feature_matrix(fset, spec, x))
            acc += k_i
            acc_sq += k_i**2
        mean = acc / draws
        var = acc_sq / draws - mean**2
        se = np.sqrt(np.maximum(var, 0.0) / draws)
        dev = np.abs(mean - k_pool)
        assert np.all(dev <= 4.5 * se + 1e-9)
        assert np.mean(dev <= 3.0 * se + 1e-9) >= 0.97

    def test_pool_smaller_than_s_rejected(self, spline_problem):
        spec, x = spline_problem
        with pytest.raises(ValueError):
            sample_exact_leverage(spec, x, 0.1, 50, 20, np.random.default_rng(0))


class TestApproxLeverageSample:
    def test_trace_identity(self, spline_problem):
        spec, x = spline_problem
        lam, s, n = 0.05, 40, x.shape[0]
        _, profile = approx_leverage_sample(spec, x, lam, s, np.random.default_rng(28))
        freqs = spectral_sample(spec, np.random.default_rng(28), s)
        z = feature_matrix(spec, freqs, x)
        d_tilde = effective_dof(z @ z.T / s, lam, n)
        assert abs(profile.total - s * d_tilde) <= 1e-8 * s
        assert profile.dof == pytest.approx(d_tilde, abs=1e-8)

    def test_scores_in_range(self, spline_problem):
        spec, x = spline_problem
        _, profile = approx_leverage_sample(spec, x, 0.05, 50, np.random.default_rng(29))
        assert np.all(profile.scores >= 0)
        assert np.all(profile.scores < 50)

    def test_woodbury_equivalence_line3(self, spline_problem):
        # scoring through (K~ + n lambda I)^{-1} must reproduce the
        # inner-matrix diagonal
        spec, x = spline_problem
        lam, s, n = 0.05, 30, x.shape[0]
        _, profile = approx_leverage_sample(spec, x, lam, s, np.random.default_rng(30))
        freqs = spectral_sample(spec, np.random.default_rng(30), s)
        z = feature_matrix(spec, freqs, x)
        k_tilde = z @ z.T / s
        direct = np.einsum(
            "ij,ij->j", z, np.linalg.solve(k_tilde + n * lam * np.eye(n), z)
        )
        np.testing.assert_allclose(profile.scores, direct, atol=1e-8)

    def test_huge_lambda_clamps_to_one(self, spline_problem):
        spec, x = spline_problem
        fset, profile = approx_leverage_sample(
            spec, x, 1e8, 20, np.random.default_rng(31)
        )
        assert profile.scores.max() < 1e-4
        assert fset.size == 1

    def test_drawn_count_is_rounded_dof(self, spline_problem):
        spec, x = spline_problem
        fset, profile = approx_leverage_sample(spec, x, 0.05, 40, np.random.default_rng(32))
        assert fset.size == int(np.clip(np.rint(profile.total / 40), 1, 40))
        assert fset.size < 40  # genuine compression at this lambda

    def test_block_size_does_not_change_scores(self, spline_problem):
        spec, x = spline_problem
        _, p1 = approx_leverage_sample(
            spec, x, 0.05, 25, np.random.default_rng(33), block_size=7
        )
        _, p2 = approx_leverage_sample(
            spec, x, 0.05, 25, np.random.default_rng(33), block_size=4096
        )
        np.testing.assert_allclose(p1.scores, p2.scores, rtol=1e-8)

    def test_top_l_mode_deterministic_stable_ties(self, spline_problem):
        spec, x = spline_problem
        a, _ = approx_leverage_sample(
            spec, x, 0.05, 30, np.random.default_rng(34), top_l=True
        )
        b, _ = approx_leverage_sample(
            spec, x, 0.05, 30, np.random.default_rng(34), top_l=True
        )
        np.testing.assert_array_equal(a.frequencies, b.frequencies)

    def test_pair_style_trace_identity(self):
        rng = np.random.default_rng(35)
        spec = gaussian_kernel(1.0, dim=2, feature_style=FeatureStyle.COS_SIN_PAIR)
        x = rng.standard_normal((40, 2))
        lam, s = 0.05, 20
        _, profile = approx_leverage_sample(spec, x, lam, s, np.random.default_rng(36))
        freqs = spectral_sample(spec, np.random.default_rng(36), s)
        z = feature_matrix(spec, freqs, x)
        d_tilde = effective_dof(z @ z.T / s, lam, 40)
        assert abs(profile.total - s * d_tilde) <= 1e-8 * s

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfboot import (
    BootstrapDistribution,
    DimensionError,
    QuantileGrid,
    RngState,
    bootstrap_distribution,
    bootstrap_pvalue,
    bootstrap_quantile,
    chisq_quantile,
    coverage_discrepancy,
    weighted_chisq_sample,
)


def make_dist(values):
    return BootstrapDistribution(
        replicates=np.asarray(values, dtype=float), scheme="gaussian", seed_record=RngState(0)
    )


class TestBootstrapDistribution:
    def test_zero_sample_gives_zero_replicates(self):
        dist = bootstrap_distribution(np.zeros((6, 2)), "gaussian", 50, RngState(1))
        assert (dist.replicates == 0).all()

    def test_single_row_is_scaled_squared_weight(self):
        z = np.array([[3.0, 4.0]])  # ||z||^2 = 25
        rng = RngState(2)
        dist = bootstrap_distribution(z, "gaussian", 20, rng)
        from qfboot.weights import draw_weights

        expected = np.sort(
            [float(draw_weights("gaussian", 1, rng.with_substream(b)) ** 2 * 25.0) for b in range(1, 21)]
        )
        np.testing.assert_allclose(dist.replicates, expected, rtol=1e-14)

    def test_rerun_bitwise_identical(self, rng):
        z = rng.normal(size=(50, 2))
        d1 = bootstrap_distribution(z, "gaussian", 100, RngState(9))
        d2 = bootstrap_distribution(z, "gaussian", 100, RngState(9))
        assert (d1.replicates == d2.replicates).all()

    def test_block_size_invariance(self, rng):
        z = rng.normal(size=(40, 3))
        d1 = bootstrap_distribution(z, "uniform", 64, RngState(4), block=7)
        d2 = bootstrap_distribution(z, "uniform", 64, RngState(4), block=512)
        assert (d1.replicates == d2.replicates).all()

    def test_scale_equivariance_exact_power_of_two(self, rng):
        z = rng.normal(size=(30, 2))
        d1 = bootstrap_distribution(z, "gaussian", 50, RngState(5))
        d2 = bootstrap_distribution(2.0 * z, "gaussian", 50, RngState(5))
        assert (d2.replicates == 4.0 * d1.replicates).all()

    def test_scale_equivariance_general(self, rng):
        z = rng.normal(size=(30, 2))
        c = 1.7
        d1 = bootstrap_distribution(z, "gaussian", 50, RngState(5))
        d2 = bootstrap_distribution(c * z, "gaussian", 50, RngState(5))
        np.testing.assert_allclose(d2.replicates, c**2 * d1.replicates, rtol=1e-12)

    def test_zero_replicates_rejected(self):
        with pytest.raises(ValueError):
            bootstrap_distribution(np.ones((3, 1)), "gaussian", 0, RngState(0))


class TestBootstrapQuantile:
    def test_order_statistic_small(self):
        dist = make_dist([1.0, 2.0, 3.0, 4.0])
        assert bootstrap_quantile(dist, 0.5) == 2.0
        assert bootstrap_quantile(dist, 0.9) == 4.0

    def test_alpha_times_b_on_integer_boundary(self):
        dist = make_dist(np.arange(1.0, 11.0))
        # 0.9 * 10 = 9 within float slop: must pick the 9th order statistic
        assert bootstrap_quantile(dist, 0.9) == 9.0

    def test_matches_chisq_oracle_on_chisq_draws(self):
        draws = weighted_chisq_sample(np.ones(3), 100_000, RngState(42))
        dist = make_dist(draws)
        assert bootstrap_quantile(dist, 0.95) == pytest.approx(
            chisq_quantile(3, 0.95), abs=0.1
        )

    def test_invalid_alpha(self):
        dist = make_dist([1.0])
        for a in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(ValueError):
                bootstrap_quantile(dist, a)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=1, max_value=200),
        st.floats(min_value=0.01, max_value=0.98),
        st.floats(min_value=0.011, max_value=0.99),
    )
    def test_monotone_in_alpha(self, b, a1, a2):
        lo, hi = sorted((a1, a2))
        draws = np.random.default_rng(b).exponential(size=b)
        dist = make_dist(draws)
        assert bootstrap_quantile(dist, lo) <= bootstrap_quantile(dist, hi)


class TestBootstrapPvalue:
    def test_below_min(self):
        dist = make_dist([1.0, 2.0, 3.0])
        assert bootstrap_pvalue(dist, 0.5) == 1.0

    def test_above_max(self):
        dist = make_dist([1.0, 2.0, 3.0])
        assert bootstrap_pvalue(dist, 9.0) == pytest.approx(0.25)

    def test_median_of_99(self):
        dist = make_dist(np.arange(1.0, 100.0))
        # observed = 50: replicates >= 50 number 50, p = 51/100
        assert bootstrap_pvalue(dist, 50.0) == pytest.approx(0.51)

    def test_duality_with_quantile(self, rng):
        draws = rng.exponential(size=500)
        dist = make_dist(draws)
        for a in (0.9, 0.95, 0.975, 0.99):
            p = bootstrap_pvalue(dist, bootstrap_quantile(dist, a))
            assert p <= 1.0 - a + 2.0 / (dist.n_replicates + 1)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            bootstrap_pvalue(make_dist([1.0]), np.nan)


class TestCoverageDiscrepancy:
    def test_self_consistent_quantiles(self, rng):
        stats = rng.chisquare(3, size=1000)
        levels = (0.9, 0.95, 0.975, 0.99)
        qs = np.quantile(stats, levels, method="inverted_cdf")
        quantiles = np.tile(qs, (1000, 1))
        assert coverage_discrepancy(stats, quantiles, levels) <= 2.0 / 1000

    def test_infinite_quantiles(self, rng):
        stats = rng.chisquare(3, size=200)
        quantiles = np.full((200, 4), np.inf)
        assert coverage_discrepancy(stats, quantiles) == pytest.approx(0.10)

    def test_misaligned_shapes(self):
        with pytest.raises(DimensionError):
            coverage_discrepancy(np.ones(5), np.ones((4, 4)))


class TestQuantileGrid:
    def test_default(self):
        assert QuantileGrid().levels == (0.9, 0.95, 0.975, 0.99)

    def test_rejects_nonincreasing(self):
        with pytest.raises(ValueError):
            QuantileGrid((0.9, 0.9))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            QuantileGrid((0.0, 0.5))

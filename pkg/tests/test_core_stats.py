import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfboot import (
    DimensionError,
    NotPSDError,
    Sample,
    matrix_sqrt,
    max_cov_discrepancy,
    quadratic_form_stat,
    sample_second_moment,
    sym_eigen,
    trace_power,
    weighted_quadratic_form_stat,
)
from qfboot.stats import load_sample_csv


def brute_force_double_sum(z):
    """Independent O(n^2 d) oracle: n^-1 sum_i sum_j Z_i' Z_j."""
    n = z.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += float(z[i] @ z[j])
    return total / n


class TestQuadraticForm:
    def test_two_point_example(self):
        s = Sample(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert quadratic_form_stat(s) == pytest.approx(1.0, abs=1e-15)

    def test_zero_sample(self):
        assert quadratic_form_stat(np.zeros((7, 4))) == 0.0

    def test_against_double_sum_oracle(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 21))
            d = int(rng.integers(1, 6))
            z = rng.normal(size=(n, d))
            q = quadratic_form_stat(z)
            oracle = brute_force_double_sum(z)
            assert q == pytest.approx(oracle, rel=1e-10, abs=1e-12)

    def test_row_permutation_invariance(self, rng):
        z = rng.normal(size=(15, 3))
        perm = rng.permutation(15)
        assert quadratic_form_stat(z) == pytest.approx(
            quadratic_form_stat(z[perm]), rel=1e-12
        )

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            quadratic_form_stat(np.array([[1.0, np.nan]]))


class TestWeightedQuadraticForm:
    def test_all_ones_reduces_to_unweighted(self, rng):
        z = rng.normal(size=(12, 4))
        assert weighted_quadratic_form_stat(z, np.ones(12)) == pytest.approx(
            quadratic_form_stat(z), rel=1e-14
        )

    def test_all_zeros(self, rng):
        z = rng.normal(size=(9, 2))
        assert weighted_quadratic_form_stat(z, np.zeros(9)) == 0.0

    def test_sign_flip_example(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0]])
        got = weighted_quadratic_form_stat(z, np.array([1.0, -1.0]))
        assert got == pytest.approx(1.0, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            weighted_quadratic_form_stat(np.ones((3, 2)), np.ones(4))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=10**6))
    def test_ones_property(self, n, seed):
        z = np.random.default_rng(seed).normal(size=(n, 3))
        assert weighted_quadratic_form_stat(z, np.ones(n)) == pytest.approx(
            quadratic_form_stat(z), rel=1e-12, abs=1e-12
        )


class TestSecondMoment:
    def test_two_point(self):
        m = sample_second_moment(np.array([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(m, 0.5 * np.eye(2))

    def test_single_row_outer_product(self):
        z = np.array([[2.0, -1.0, 0.5]])
        np.testing.assert_allclose(sample_second_moment(z), np.outer(z[0], z[0]))

    def test_entrywise_oracle(self, rng):
        z = rng.normal(size=(6, 2))
        m = sample_second_moment(z)
        for j in range(2):
            for k in range(2):
                expect = np.mean([z[i, j] * z[i, k] for i in range(6)])
                assert m[j, k] == pytest.approx(expect, rel=1e-12)

    def test_psd(self, rng):
        z = rng.normal(size=(20, 5))
        eigs = np.linalg.eigvalsh(sample_second_moment(z))
        assert eigs[0] >= -1e-10 * eigs[-1]


class TestSymEigen:
    def test_identity(self):
        spec = sym_eigen(np.eye(3))
        np.testing.assert_allclose(spec.eigenvalues, np.ones(3))

    def test_diag_descending(self):
        spec = sym_eigen(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(spec.eigenvalues, [3.0, 1.0])
        np.testing.assert_allclose(np.abs(spec.eigenvectors), np.eye(2), atol=1e-14)

    def test_hand_characteristic_polynomial(self):
        # [[2,1],[1,2]]: (2-l)^2 - 1 = 0 -> l in {3, 1}
        spec = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(spec.eigenvalues, [3.0, 1.0], rtol=1e-12)

    def test_reconstruction_and_orthonormality(self, rng):
        a = rng.normal(size=(6, 6))
        a = a + a.T
        spec = sym_eigen(a)
        v, lam = spec.eigenvectors, spec.eigenvalues
        recon = (v * lam) @ v.T
        assert np.abs(recon - a).max() <= 1e-9 * max(np.abs(a).max(), 1.0)
        np.testing.assert_allclose(v.T @ v, np.eye(6), atol=1e-9)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestMatrixSqrt:
    def test_identity(self):
        np.testing.assert_allclose(matrix_sqrt(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_allclose(matrix_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_inflated_identity(self):
        eps, n = 4.0, 500
        m = (1.0 + eps / np.sqrt(n)) * np.eye(3)
        np.testing.assert_allclose(
            matrix_sqrt(m), np.sqrt(1.0 + eps / np.sqrt(n)) * np.eye(3), rtol=1e-14
        )

    def test_square_recovers_input(self, rng):
        for _ in range(10):
            b = rng.normal(size=(5, 5))
            m = b @ b.T
            s = matrix_sqrt(m)
            assert np.abs(s @ s - m).max() <= 1e-9 * max(np.abs(m).max(), 1.0)

    def test_tiny_negative_clamped(self):
        m = np.diag([1.0, -1e-12])
        s = matrix_sqrt(m)
        assert s[1, 1] == 0.0

    def test_genuinely_indefinite_rejected(self):
        with pytest.raises(NotPSDError):
            matrix_sqrt(np.diag([1.0, -0.5]))


class TestTracePower:
    def test_identity(self):
        assert trace_power(np.eye(7), 1) == pytest.approx(7.0)

    def test_diag_squared(self):
        assert trace_power(np.diag([2.0, 3.0]), 2) == pytest.approx(13.0)

    def test_spectral_oracle(self, rng):
        b = rng.normal(size=(3, 3))
        m = b @ b.T
        lam = sym_eigen(m).eigenvalues
        for k in (1, 2, 3):
            assert trace_power(m, k) == pytest.approx((lam**k).sum(), rel=1e-9)

    def test_unsupported_power(self):
        with pytest.raises(ValueError):
            trace_power(np.eye(2), 4)


class TestMaxCovDiscrepancy:
    def test_self_target_is_zero(self, rng):
        z = rng.normal(size=(10, 3))
        assert max_cov_discrepancy(z, sample_second_moment(z)) == 0.0

    def test_identity_target_example(self):
        z = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert max_cov_discrepancy(z, np.eye(2)) == pytest.approx(0.5)

    def test_large_sample_concentrates(self, rng):
        z = rng.normal(size=(10_000, 3))
        assert max_cov_discrepancy(z, np.eye(3)) < 0.1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            max_cov_discrepancy(np.ones((4, 2)), np.eye(3))


class TestCsvLoading:
    def test_roundtrip_with_header(self, tmp_path):
        p = tmp_path / "data.csv"
        p.write_text("a,b\n1.0,2.0\n3.5,-4.0\n")
        s = load_sample_csv(p)
        np.testing.assert_allclose(s.values, [[1.0, 2.0], [3.5, -4.0]])

    def test_without_header(self, tmp_path):
        p = tmp_path / "data.csv"
        p.write_text("1.0,2.0\n3.5,-4.0\n")
        assert load_sample_csv(p).n == 2

    def test_ragged_rejected(self, tmp_path):
        p = tmp_path / "data.csv"
        p.write_text("1.0,2.0\n3.5\n")
        with pytest.raises(ValueError):
            load_sample_csv(p)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infsup.linalg import (
    NotPositiveDefinite,
    cholesky,
    numerical_rank,
    singular_values,
    svd,
    sym_eigen,
)

from helpers import random_gram


class TestCholesky:
    def test_identity(self):
        assert np.allclose(cholesky(np.eye(3)), np.eye(3))

    def test_diagonal_square_roots(self):
        assert np.allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_recompose(self):
        s = np.array([[2.0, 1.0], [1.0, 2.0]])
        lower = cholesky(s)
        assert np.tril(lower).tolist() == lower.tolist()
        assert np.linalg.norm(lower @ lower.T - s) <= 1e-14

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_semidefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.zeros((2, 2)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            cholesky(np.ones((2, 3)))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 12))
    @settings(max_examples=30, deadline=None)
    def test_recompose_random_spd(self, seed, dim):
        s = random_gram(dim, np.random.default_rng(seed), cond=100.0)
        lower = cholesky(s)
        assert np.linalg.norm(lower @ lower.T - s) <= 1e-12 * np.linalg.norm(s)


class TestSymEigen:
    def test_diagonal(self):
        w, q = sym_eigen(np.diag([3.0, 1.0, 2.0]))
        assert np.allclose(w, [1.0, 2.0, 3.0])
        assert np.allclose(np.abs(q.T @ q), np.eye(3))

    def test_symmetry_forced_pair(self):
        w, _ = sym_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(w, [-1.0, 1.0])

    def test_residual_random_symmetric(self):
        rng = np.random.default_rng(3)
        s = rng.standard_normal((8, 8))
        s = 0.5 * (s + s.T)
        w, q = sym_eigen(s)
        scale = 1.0 + np.abs(w).max()
        assert np.linalg.norm(s @ q - q * w) <= 1e-10 * scale
        assert np.all(np.diff(w) >= 0.0)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 10))
    @settings(max_examples=30, deadline=None)
    def test_spd_eigenvalues_positive(self, seed, dim):
        s = random_gram(dim, np.random.default_rng(seed), cond=50.0)
        w, _ = sym_eigen(s)
        assert np.all(w > 0.0)


class TestSvd:
    def test_diagonal_sorted(self):
        res = svd(np.diag([5.0, 0.0, 2.0]))
        assert np.allclose(res.values, [5.0, 2.0, 0.0])

    def test_zero_matrix(self):
        res = svd(np.zeros((3, 2)))
        assert np.allclose(res.values, 0.0)

    def test_values_match_gram_eigenvalues(self):
        # independent oracle: singular values are the square roots of the
        # eigenvalues of M'M
        rng = np.random.default_rng(11)
        m = rng.standard_normal((6, 4))
        w, _ = sym_eigen(m.T @ m)
        expected = np.sqrt(np.clip(w[::-1], 0.0, None))
        assert np.allclose(svd(m).values, expected, atol=1e-9)

    def test_recompose_and_orthonormality(self):
        rng = np.random.default_rng(12)
        m = rng.standard_normal((5, 7))
        res = svd(m)
        scale = 1.0 + res.values[0]
        assert np.linalg.norm(res.recompose() - m) <= 1e-10 * scale
        assert np.linalg.norm(res.left.T @ res.left - np.eye(5)) <= 1e-10
        assert np.linalg.norm(res.right.T @ res.right - np.eye(7)) <= 1e-10

    @given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 9))
    @settings(max_examples=30, deadline=None)
    def test_transpose_has_same_values(self, seed, rows, cols):
        m = np.random.default_rng(seed).standard_normal((rows, cols))
        a = singular_values(m)
        b = singular_values(m.T)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


class TestNumericalRank:
    def test_clear_gap(self):
        assert numerical_rank([5.0, 2.0, 1e-18], 1e-12) == 2

    def test_zero_spectrum(self):
        assert numerical_rank([0.0, 0.0], 1e-12) == 0
        assert numerical_rank([], 1e-12) == 0

    def test_boundary_is_strict(self):
        # values sitting exactly at rel_tol * smax do not count
        assert numerical_rank([1.0, 1e-12], 1e-12) == 1
        # hand evaluation of the strict count: 1 > 1e-12, 2e-12 > 1e-12,
        # 1e-12 is excluded
        assert numerical_rank([1.0, 2e-12, 1e-12], 1e-12) == 2

    def test_full_rank(self):
        assert numerical_rank([3.0, 2.0, 1.0], 1e-12) == 3

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            numerical_rank([1.0, 2.0], 1e-12)  # not nonincreasing
        with pytest.raises(ValueError):
            numerical_rank([1.0, -1.0], 1e-12)
        with pytest.raises(ValueError):
            numerical_rank([1.0], 0.0)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(0, 8))
    @settings(max_examples=40, deadline=None)
    def test_counts_constructed_spectra(self, seed, above, below):
        rng = np.random.default_rng(seed)
        big = np.sort(rng.uniform(0.5, 2.0, above))[::-1]
        tiny = np.sort(rng.uniform(0.0, 1e-14, below))[::-1] * big[0]
        values = np.concatenate([big, tiny])
        assert numerical_rank(values, 1e-12) == above

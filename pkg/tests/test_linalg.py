import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gcnbounds import frobenius_norm, hadamard, spectral_norm
from gcnbounds.errors import DimensionError, NonFiniteError, PowerIterationError

from conftest import svd_norm


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((4, 2))) == 0.0

    def test_random_5x5_vs_svd_oracle(self):
        a = np.random.default_rng(5).standard_normal((5, 5))
        assert spectral_norm(a) == pytest.approx(svd_norm(a), rel=1e-10)

    def test_rectangular_vs_svd(self):
        rng = np.random.default_rng(17)
        for shape in [(3, 7), (7, 3), (1, 5), (5, 1)]:
            a = rng.standard_normal(shape)
            assert spectral_norm(a) == pytest.approx(svd_norm(a), rel=1e-9)

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((20, 20))
        a[np.abs(a) < 1.0] = 0.0
        assert spectral_norm(sp.csr_matrix(a)) == pytest.approx(spectral_norm(a), rel=1e-10)

    def test_nonconvergence_error_carries_state(self):
        a = np.random.default_rng(0).standard_normal((8, 8))
        with pytest.raises(PowerIterationError) as exc:
            spectral_norm(a, tol=1e-14, max_iters=2)
        assert exc.value.iterations == 2
        assert exc.value.sigma > 0
        assert exc.value.residual >= 0

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            spectral_norm(np.array([[1.0, float("nan")]]))

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            spectral_norm(np.eye(2), tol=0.0)

    def test_deterministic(self):
        a = np.random.default_rng(9).standard_normal((12, 12))
        assert spectral_norm(a) == spectral_norm(a)


class TestFrobeniusNorm:
    def test_identity_3x3(self):
        assert frobenius_norm(np.eye(3)) == pytest.approx(math.sqrt(3.0), rel=1e-15)

    def test_zero(self):
        assert frobenius_norm(np.zeros((2, 5))) == 0.0

    def test_3_4_5(self):
        assert frobenius_norm(np.array([[3.0, 4.0]])) == pytest.approx(5.0, rel=1e-15)


class TestHadamard:
    def test_ones_identity(self):
        a = np.arange(6, dtype=float).reshape(2, 3)
        assert np.array_equal(hadamard(a, np.ones((2, 3))), a)

    def test_zeros(self):
        a = np.arange(6, dtype=float).reshape(2, 3)
        assert np.array_equal(hadamard(a, np.zeros((2, 3))), np.zeros((2, 3)))

    def test_entrywise(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[2.0, 0.0], [1.0, -1.0]])
        assert np.array_equal(hadamard(a, b), np.array([[2.0, 0.0], [3.0, -4.0]]))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            hadamard(np.ones((2, 2)), np.ones((2, 3)))


# matrix-norm inequalities on random instances (full 1000-trial suite runs in
# the acceptance module; here hypothesis drives the shapes and seeds)

SLACK = 1e-9


def _rand(rng, rows, cols):
    return rng.standard_normal((rows, cols)) * rng.uniform(0.1, 3.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8), st.integers(1, 8), st.integers(1, 8))
def test_product_norm_inequality(seed, n, k, m):
    rng = np.random.default_rng(seed)
    a1, a2 = _rand(rng, n, k), _rand(rng, k, m)
    assert frobenius_norm(a1 @ a2) <= spectral_norm(a1) * frobenius_norm(a2) + SLACK


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8), st.integers(1, 8), st.integers(1, 8))
def test_product_difference_inequality(seed, n, k, m):
    rng = np.random.default_rng(seed)
    a1, a2 = _rand(rng, n, k), _rand(rng, k, m)
    b1, b2 = _rand(rng, n, k), _rand(rng, k, m)
    lhs = frobenius_norm(a1 @ a2 - b1 @ b2)
    rhs = (frobenius_norm(a1 - b1) * spectral_norm(a2)
           + frobenius_norm(a2 - b2) * spectral_norm(b1))
    assert lhs <= rhs + SLACK


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8), st.integers(1, 8))
def test_hadamard_norm_inequality(seed, n, m):
    rng = np.random.default_rng(seed)
    a1, a2 = _rand(rng, n, m), _rand(rng, n, m)
    lhs = frobenius_norm(hadamard(a1, a2))
    alpha = float(np.abs(a2).max())
    assert lhs <= alpha * frobenius_norm(a1) + SLACK
    assert alpha * frobenius_norm(a1) <= frobenius_norm(a1) * frobenius_norm(a2) + SLACK

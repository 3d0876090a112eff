"""
Tests for the dense linear-algebra kernel
"""
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from numpy.testing import assert_allclose

from app import sampling
from app.errors import DimensionMismatch, InvalidArgument, NotHermitian, NotPSD, SingularSystem, SpectralRadiusTooLarge
from app.numkit import (
    Tolerance,
    adjoint,
    as_cmat,
    checked_inverse,
    is_nilpotent,
    is_psd,
    psd_factor,
    spectral_radius,
    sqrt_psd,
    stein_series,
    stein_solve,
    stein_solve_pair,
)


class TestTolerance:
    def test_defaults(self):
        tol = Tolerance()
        assert tol.abs == 1e-10
        assert tol.rel == 1e-8

    def test_bound(self):
        assert Tolerance(1e-3, 1e-2).bound(10.0) == pytest.approx(0.101)

    def test_rejects_negative(self):
        with pytest.raises(InvalidArgument):
            Tolerance(-1.0, 0.0)


class TestAsCmat:
    def test_scalar_becomes_1x1(self):
        assert as_cmat(2.5).shape == (1, 1)

    def test_rejects_3d(self):
        with pytest.raises(DimensionMismatch):
            as_cmat(np.zeros((2, 2, 2)))


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, -0.8j])) == pytest.approx(0.8)

    def test_nilpotent(self):
        a = np.array([[0, 5], [0, 0]], dtype=complex)
        assert spectral_radius(a) == pytest.approx(0.0, abs=1e-12)
        assert is_nilpotent(a)

    def test_not_nilpotent(self):
        assert not is_nilpotent(np.diag([0.1, 0.0]))


class TestPsd:
    def test_identity(self):
        ok, lam = is_psd(np.eye(3))
        assert ok
        assert lam == pytest.approx(1.0)

    def test_negative_eigenvalue(self):
        ok, lam = is_psd(np.diag([1.0, -0.5]))
        assert not ok
        assert lam == pytest.approx(-0.5)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            is_psd(np.array([[1, 1], [0, 1]], dtype=complex))

    def test_sqrt_squares_back(self, rng):
        m = sampling.random_psd(rng, 4)
        root = sqrt_psd(m)
        assert_allclose(root @ root, m, atol=1e-10)
        assert_allclose(root, adjoint(root), atol=1e-12)

    def test_sqrt_rejects_negative(self):
        with pytest.raises(NotPSD) as info:
            sqrt_psd(np.diag([1.0, -1.0]))
        assert info.value.witness["lambda_min"] == pytest.approx(-1.0)

    def test_psd_factor_truncates_rank(self, rng):
        m = sampling.random_psd(rng, 5, rank=2)
        basis, vecs, lam = psd_factor(m)
        assert basis.shape == (5, 2)
        assert lam.shape == (2,)
        assert_allclose(basis @ adjoint(basis), m, atol=1e-10)


class TestStein:
    def test_zero_matrix_gives_identity(self):
        assert_allclose(stein_solve(np.zeros((2, 2))), np.eye(2))

    def test_scalar_closed_form(self):
        gamma = stein_solve(np.array([[0.5]]))
        assert gamma[0, 0].real == pytest.approx(1 / (1 - 0.25))

    def test_radius_guard(self):
        with pytest.raises(SpectralRadiusTooLarge):
            stein_solve(np.diag([1.0, 0.2]))

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @hsettings(max_examples=25, deadline=None)
    def test_pair_matches_series(self, seed):
        rng = np.random.default_rng(seed)
        p = int(rng.integers(1, 5))
        a = sampling.with_radius(rng, p, 0.7)
        b = sampling.with_radius(rng, p, 0.7)
        rhs = sampling.random_cmat(rng, p)
        x = stein_solve_pair(a, b, rhs)
        assert np.linalg.norm(x - a @ x @ adjoint(b) - rhs) <= 1e-9 * max(1.0, np.linalg.norm(x))
        assert_allclose(x, stein_series(a, b, rhs), atol=1e-9)

    def test_pair_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            stein_solve_pair(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((3, 2)))

    def test_gamma_dominates_identity(self, rng):
        gamma = stein_solve(sampling.with_radius(rng, 3, 0.8))
        assert np.min(np.linalg.eigvalsh(gamma)) >= 1.0 - 1e-10


def test_checked_inverse_refuses_singular():
    with pytest.raises(SingularSystem):
        checked_inverse(np.array([[1.0, 1.0], [1.0, 1.0]]))

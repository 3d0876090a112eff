"""
Tests for Wiener-algebra inversion and Hankel realization
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from app import algebra, sampling, schur
from app.errors import DeterminantVanishes, DimensionMismatch, InvalidArgument, NoRankPlateau
from app.mps import MatrixPowerSeries


def _near_identity(rng, size: float = 0.45) -> MatrixPowerSeries:
    tail = sampling.random_series(rng, 2, 10, decay=0.4)
    coeffs = np.array(tail.coeffs)
    coeffs[0] = 0
    coeffs = coeffs * (size / sum(np.linalg.norm(c, 2) for c in coeffs))
    coeffs[0] += np.eye(2)
    return MatrixPowerSeries(coeffs, p=2)


class TestWienerSeries:
    def test_rejects_block_shaped(self):
        with pytest.raises(DimensionMismatch):
            algebra.WienerSeries(MatrixPowerSeries(np.zeros((2, 2, 4)), p=2))

    def test_l1_norm(self):
        f = MatrixPowerSeries(np.stack([np.eye(2), -0.5 * np.eye(2)]), p=2)
        assert algebra.WienerSeries(f).l1_norm == pytest.approx(1.5)

    def test_det_polynomial(self):
        f = MatrixPowerSeries(np.stack([np.eye(2), np.diag([-2.0, 0.0])]), p=2)
        assert_allclose(algebra.det_polynomial(algebra.WienerSeries(f)), [1.0, -2.0], atol=1e-12)

    def test_winding_counts_interior_zeros(self):
        f = MatrixPowerSeries(np.stack([np.eye(2), np.diag([-2.0, 0.0])]), p=2)
        winding, _ = algebra.boundary_winding(algebra.WienerSeries(f), 256)
        assert winding == 1


class TestInversion:
    def test_near_identity(self, rng):
        f = _near_identity(rng)
        g = algebra.wplus_invert(algebra.WienerSeries(f), 40)
        assert algebra.inversion_residual(f, g, 40) < 1e-10

    def test_interior_zero_witness(self):
        bad = MatrixPowerSeries(np.stack([np.eye(2), -2 * np.eye(2)]), p=2)
        with pytest.raises(DeterminantVanishes) as info:
            algebra.wplus_invert(algebra.WienerSeries(bad), 20)
        assert info.value.witness["z"] == pytest.approx(0.5, abs=1e-6)

    def test_boundary_zero(self):
        bad = MatrixPowerSeries(np.stack([np.eye(2), -np.eye(2)]), p=2)
        with pytest.raises(DeterminantVanishes) as info:
            algebra.wplus_invert(algebra.WienerSeries(bad), 20)
        assert info.value.witness["abs_det"] <= info.value.witness["det_tol"]

    def test_small_grid(self, rng):
        with pytest.raises(InvalidArgument):
            algebra.wplus_invert(algebra.WienerSeries(_near_identity(rng)), 10, circle_grid=4)


class TestHankel:
    def test_block_layout(self):
        e = MatrixPowerSeries(np.stack([n * np.eye(1) for n in range(6)]), p=1)
        h = algebra.block_hankel(e, 2, 1)
        assert_allclose(h, [[1, 2], [2, 3]])

    def test_realized_series_round_trip(self, rng):
        u = sampling.contractive_colligation(rng, 3, 2, scale=0.8)
        s = schur.realization_to_series(u, 40)
        r = algebra.hankel_realize(s)
        assert r.state_dim == 3
        assert r.to_series(40, p=2).max_deviation(s) < 1e-8

    def test_constant_series(self):
        r = algebra.hankel_realize(MatrixPowerSeries.constant(np.eye(2), order=6))
        assert r.state_dim == 0
        assert_allclose(r.d, np.eye(2))

    def test_no_plateau(self, rng):
        with pytest.raises(NoRankPlateau):
            algebra.hankel_realize(sampling.random_series(rng, 2, 20, decay=0.95))

    def test_order_too_small(self):
        with pytest.raises(InvalidArgument):
            algebra.hankel_realize(MatrixPowerSeries.identity(2, 1))

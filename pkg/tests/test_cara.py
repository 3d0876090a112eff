"""
Tests for Caratheodory multipliers
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app import cara, sampling
from app.errors import InvalidArgument, NotCaraMultiplier, NotHermitian, NotPSD, Phi0NotHermitianAfterSplit
from app.mps import MatrixPowerSeries

ONE_PLUS_Z = MatrixPowerSeries(np.array([1.0, 1.0]).reshape(-1, 1, 1), p=1)
ONE_MINUS_3Z = MatrixPowerSeries(np.array([1.0, -3.0]).reshape(-1, 1, 1), p=1)


class TestHerglotzData:
    def test_angle_range(self):
        with pytest.raises(InvalidArgument):
            cara.HerglotzData.of(np.zeros((1, 1)), [(7.0, np.eye(1))])

    def test_mass_must_be_psd(self):
        with pytest.raises(NotPSD):
            cara.HerglotzData.of(np.zeros((2, 2)), [(0.5, np.diag([1.0, -1.0]))])

    def test_imaginary_part_hermitian(self):
        with pytest.raises(NotHermitian):
            cara.HerglotzData.of(np.array([[0, 1], [0, 0]]), [])

    def test_single_atom(self):
        data = cara.HerglotzData.of(np.zeros((2, 2)), [(0.0, np.eye(2))])
        phi = cara.herglotz_series(data, 5)
        assert_allclose(phi.coefficient(0), np.eye(2))
        for n in range(1, 6):
            assert_allclose(phi.coefficient(n), 2 * np.eye(2))

    def test_imaginary_part_in_constant_term(self):
        x = np.array([[1.0, 0.5j], [-0.5j, 0.0]])
        phi = cara.herglotz_series(cara.HerglotzData.of(x, []), 3)
        assert_allclose(phi.coefficient(0), 1j * x)
        assert_allclose(phi.coefficient(2), np.zeros((2, 2)))


class TestMoments:
    @pytest.mark.parametrize("depth", [1, 4, 8])
    def test_synthesized_series_pass(self, rng, depth):
        phi = cara.herglotz_series(sampling.herglotz_data(rng, 2, 3), 20)
        ok, lam = cara.moment_check(phi, depth)
        assert ok
        assert lam >= -1e-10

    def test_non_accretive_fails(self):
        ok, lam = cara.moment_check(ONE_MINUS_3Z, 1)
        assert not ok
        assert lam == pytest.approx(-0.5)

    def test_unsplit_imaginary_part(self):
        phi = MatrixPowerSeries.constant(1j * np.eye(2), order=3)
        with pytest.raises(Phi0NotHermitianAfterSplit):
            cara.moment_toeplitz(phi, 2, split_imaginary=False)
        ok, _ = cara.moment_check(phi, 2)
        assert ok

    def test_depth_range(self):
        with pytest.raises(InvalidArgument):
            cara.moment_toeplitz(ONE_PLUS_Z, 3)

    def test_accretive_at_point(self, rng):
        phi = cara.herglotz_series(sampling.herglotz_data(rng, 2, 3), 60)
        ok, _ = cara.is_accretive_at(phi, (0.3 - 0.4j) * np.eye(2))
        assert ok


class TestKernel:
    def test_gram_positive(self, rng):
        phi = cara.herglotz_series(sampling.herglotz_data(rng, 2, 3), 60)
        points = [0.3 * np.eye(2), sampling.random_normal(rng, 2, 0.5)]
        assert cara.cara_kernel_gram(phi, points).psd


class TestRecovery:
    def test_one_plus_z(self):
        report = cara.realization_recovery(ONE_PLUS_Z, 20)
        assert report.convention == "power_n"
        assert report.phi0_normalization == "twice_re"
        assert report.residuals["power_n"] < 1e-8
        assert_allclose(report.c0 @ report.c0.conj().T, 2 * np.eye(1), atol=1e-10)

    def test_synthesized(self, rng):
        phi = cara.herglotz_series(sampling.herglotz_data(rng, 2, 3), 40)
        report = cara.realization_recovery(phi, 40)
        assert report.convention == "power_n"
        assert report.residuals["phi0_twice_re"] < 1e-7
        assert report.residuals["power_n"] < 1e-7
        assert_allclose(report.predicted(2), phi.coefficient(2), atol=1e-7)

    def test_rejects_non_accretive(self):
        with pytest.raises(NotCaraMultiplier) as info:
            cara.realization_recovery(ONE_MINUS_3Z, 6)
        assert info.value.witness["lambda_min"] < 0


def test_measure_round_trip():
    angles = [0.0, math.pi / 2, 3.0]
    masses = [np.diag([1.0, 0.5]), np.eye(2) * 0.25, np.array([[0.5, 0.1], [0.1, 0.5]])]
    data = cara.HerglotzData.of(np.zeros((2, 2)), list(zip(angles, masses)))
    phi = cara.herglotz_series(data, 12)
    for got, expected in zip(cara.measure_from_series(phi, angles), masses):
        assert_allclose(got, expected, atol=1e-10)

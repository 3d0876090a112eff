"""
Tests for Blaschke factors, their realizations and division
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from app import blaschke, sampling
from app.errors import DimensionMismatch, NotInRange, SpectralRadiusTooLarge
from app.mps import MatrixPowerSeries, evaluate, shift, star_mul
from app.numkit import fro
from app.spaces import hardy_inner
from app.symm import embed_quaternion

NILPOTENT = np.array([[0, 0.5], [0, 0]], dtype=complex)


class TestBuild:
    def test_vanishes_at_node(self, rng):
        a = sampling.with_radius(rng, 2, 0.5)
        bf = blaschke.build(a, 60)
        assert fro(evaluate(bf.series, a)) < 1e-10

    def test_invariants(self, rng):
        bf = blaschke.build(sampling.with_radius(rng, 3, 0.6), 20)
        for name, value in bf.invariant_residuals().items():
            assert value < 1e-10, name

    def test_scalar_is_classical(self):
        a = 0.4 + 0.2j
        bf = blaschke.build(np.array([[a]]), 10)
        assert bf.series.coefficient(0)[0, 0] == pytest.approx(-a)
        for n in range(1, 11):
            expected = np.conj(a) ** (n - 1) * (1 - abs(a) ** 2)
            assert bf.series.coefficient(n)[0, 0] == pytest.approx(expected)

    def test_quaternion_node(self):
        bf = blaschke.build(embed_quaternion(0.3, 0.4), 10)
        assert_allclose(bf.gamma, 4.0 / 3.0 * np.eye(2), atol=1e-12)
        assert_allclose(bf.l, np.eye(2), atol=1e-12)

    def test_radius_guard(self):
        with pytest.raises(SpectralRadiusTooLarge):
            blaschke.build(np.eye(2), 10)

    def test_rejects_rectangular(self):
        with pytest.raises(DimensionMismatch):
            blaschke.build(np.zeros((2, 3)), 10)


class TestInnerness:
    def test_shifts_are_orthonormal(self):
        a = np.diag([0.5, -0.3j])
        bf = blaschke.build(a, 80)
        for n in range(4):
            for k in range(4):
                gram = hardy_inner(shift(bf.series, n), shift(bf.series, k))
                target = np.eye(2) if n == k else np.zeros((2, 2))
                assert_allclose(gram, target, atol=1e-10)

    def test_multiplication_is_isometric(self, rng):
        bf = blaschke.build(sampling.with_radius(rng, 2, 0.5), 80)
        f = sampling.random_polynomial(rng, 2, 10)
        uf = star_mul(bf.series, f)
        assert_allclose(hardy_inner(uf, uf), hardy_inner(f, f), atol=1e-8)


class TestRealization:
    def test_weighted_unitary(self, rng):
        bf = blaschke.build(sampling.with_radius(rng, 2, 0.7), 10)
        r = blaschke.realization(bf)
        assert r.weight is not None
        assert blaschke.check_weighted_unitary(r) < 1e-10

    def test_series_matches(self, rng):
        bf = blaschke.build(sampling.with_radius(rng, 2, 0.6), 15)
        back = blaschke.realization(bf).to_series(15, p=2)
        assert back.max_deviation(bf.series) < 1e-12


class TestClosedForms:
    def test_star_form_always_agrees(self):
        bf = blaschke.build(NILPOTENT, 20)
        assert blaschke.closed_form_discrepancy(bf)["star_vs_closed"] < 1e-12

    def test_product_form_agrees_for_normal_node(self):
        bf = blaschke.build(np.diag([0.5, 0.2j]), 20)
        assert blaschke.closed_form_discrepancy(bf)["product_vs_closed"] < 1e-12

    def test_product_form_differs_otherwise(self):
        bf = blaschke.build(NILPOTENT, 20)
        assert blaschke.closed_form_discrepancy(bf)["product_vs_closed"] > 1e-3


class TestDivision:
    def test_round_trip(self, rng):
        a = np.diag([0.5, 0.3])
        bf = blaschke.build(a, 30)
        g0 = sampling.random_polynomial(rng, 2, 4)
        h = star_mul(bf.series, g0, max_order=30)
        g = blaschke.divide_blaschke(h, bf)
        for n in range(5):
            assert_allclose(g.coefficient(n), g0.coefficient(n), atol=1e-9)
        assert g.hardy_norm() == pytest.approx(h.hardy_norm(), abs=1e-9)

    def test_round_trip_non_normal(self, rng):
        for _ in range(5):
            bf = blaschke.build(sampling.with_radius(rng, 2, 0.6), 60)
            g0 = sampling.random_polynomial(rng, 2, 20)
            h = star_mul(bf.series, g0, max_order=60)
            g = blaschke.divide_blaschke(h, bf)
            assert g.max_deviation(g0, through=30) < 1e-9

    def test_projection_complement_is_divisible(self, rng):
        a = np.diag([0.5, 0.3])
        bf = blaschke.build(a, 30)
        f = sampling.random_polynomial(rng, 2, 6).pad(30)
        proj, _ = blaschke.project_complement(f, a)
        assert fro(evaluate(f - proj, a)) < 1e-12
        blaschke.divide_blaschke(f - proj, bf)

    def test_decomposition(self, rng):
        a = np.array([[0.5, 0.4], [0.0, 0.3]], dtype=complex)
        order = 40
        bf = blaschke.build(a, order)
        f = sampling.random_polynomial(rng, 2, 6).pad(order)
        proj, _ = blaschke.project_complement(f, a)
        g = blaschke.divide_blaschke(f - proj, bf)
        back = proj + star_mul(bf.series, g, max_order=order)
        keep = order - blaschke.division_buffer(order)
        assert back.max_deviation(f, through=keep) < 1e-9

    def test_not_in_range(self):
        bf = blaschke.build(np.diag([0.5, 0.3]), 10)
        with pytest.raises(NotInRange) as info:
            blaschke.divide_blaschke(MatrixPowerSeries.identity(2, 10), bf)
        assert "h_at_a" in info.value.witness

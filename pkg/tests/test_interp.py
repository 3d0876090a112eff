"""
Tests for interpolation with matrix nodes
"""
import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from numpy.testing import assert_allclose

from app import interp, sampling
from app.blaschke import check_weighted_unitary
from app.errors import DimensionMismatch, GramSingular, InvalidArgument, SpectralRadiusTooLarge
from app.mps import evaluate, star_mul


class TestData:
    def test_needs_matching_lengths(self):
        with pytest.raises(InvalidArgument):
            interp.InterpolationData.of([np.zeros((2, 2))], [])

    def test_node_sizes(self):
        with pytest.raises(DimensionMismatch):
            interp.InterpolationData.of([np.zeros((2, 2)), np.zeros((3, 3))], [np.eye(2), np.eye(3)])

    def test_node_radius(self):
        with pytest.raises(SpectralRadiusTooLarge):
            interp.InterpolationData.of([np.eye(2)], [np.eye(2)])


class TestGram:
    def test_single_scalar_node(self):
        g = interp.gram([np.array([[0.5]])])
        assert g[0, 0].real == pytest.approx(1 / 0.75)

    def test_structure_identity(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 3)
        assert interp.stein_structure_residual(nodes) < 1e-10

    def test_repeated_node_is_singular(self, rng):
        a = sampling.with_radius(rng, 2, 0.4)
        data = interp.InterpolationData.of([a, a], [np.eye(2), np.eye(2)])
        with pytest.raises(GramSingular):
            interp.solve_min(data, 10)


class TestMinimalSolution:
    def test_scalar_closed_form(self):
        a, b = 0.5 + 0.1j, 2.0 - 1.0j
        sol = interp.solve_min(interp.InterpolationData.of([[[a]]], [[[b]]]), 12)
        c = (1 - abs(a) ** 2) * b
        for n in range(13):
            assert sol.fmin.coefficient(n)[0, 0] == pytest.approx(np.conj(a) ** n * c)

    def test_zero_values_give_zero(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 3)
        sol = interp.solve_min(interp.InterpolationData.of(nodes, [np.zeros((2, 2))] * 3), 20)
        assert sol.fmin.hardy_norm() < 1e-14

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @hsettings(max_examples=10, deadline=None)
    def test_interpolates(self, seed):
        rng = np.random.default_rng(seed)
        nodes = sampling.interpolation_nodes(rng, 2, int(rng.integers(1, 4)))
        values = [sampling.random_cmat(rng, 2) for _ in nodes]
        sol = interp.solve_min(interp.InterpolationData.of(nodes, values), 60)
        for a, b in zip(nodes, values):
            assert_allclose(evaluate(sol.fmin, a), b, atol=1e-7)


class TestTheta:
    def test_star_formula_matches_psi_realization(self, rng):
        for count in (1, 2, 3):
            nodes = sampling.interpolation_nodes(rng, 2, count)
            th = interp.theta(nodes, 40)
            via_psi = interp.psi_realization(nodes).to_series(40, p=2)
            assert th.max_deviation(via_psi) < 1e-9

    def test_isometry(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 2)
        th = interp.theta(nodes, 60)
        for _ in range(3):
            g = sampling.random_polynomial(rng, 2, 15)
            assert star_mul(th, g, max_order=60).hardy_norm() == pytest.approx(g.hardy_norm(), abs=1e-6)

    def test_vanishes_at_nodes(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 2)
        th = interp.theta(nodes, 60)
        for a in nodes:
            assert np.linalg.norm(evaluate(th, a)) < 1e-8

    def test_psi_realization_is_weighted_unitary(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 3)
        assert check_weighted_unitary(interp.psi_realization(nodes)) < 1e-9

    @pytest.mark.parametrize("z,w", [(0.0, 0.0), (0.3, -0.2j), (0.5 + 0.1j, 0.4)])
    def test_psi_kernel(self, rng, z, w):
        nodes = sampling.interpolation_nodes(rng, 2, 2)
        assert interp.psi_kernel_residual(nodes, z, w) < 1e-9


class TestParametrization:
    def test_every_parameter_interpolates(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 2)
        values = [sampling.random_cmat(rng, 2) for _ in nodes]
        sol = interp.solve_min(interp.InterpolationData.of(nodes, values), 60)
        res = interp.residuals(sol, sampling.random_polynomial(rng, 2, 6))
        assert res["fmin"] < 1e-7
        assert res["parametrized"] < 1e-7
        assert res["theta"] < 1e-8
        assert res["orthogonality"] < 1e-7

    def test_parameter_shape(self, rng):
        nodes = sampling.interpolation_nodes(rng, 2, 1)
        sol = interp.solve_min(interp.InterpolationData.of(nodes, [np.eye(2)]), 20)
        with pytest.raises(DimensionMismatch):
            interp.parametrize(sol, sampling.random_polynomial(rng, 3, 2))

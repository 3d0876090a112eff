"""
Tests for matrix power series
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from numpy.testing import assert_allclose

from app import sampling
from app.errors import (
    DimensionMismatch,
    InvalidArgument,
    OutsideConvergence,
    RadiusOrder,
    SingularLeadingCoefficient,
)
from app.mps import (
    MatrixPowerSeries,
    backward_shift,
    contour_eval,
    estimate_radius,
    eval_right_product,
    eval_scalar,
    evaluate,
    integrate,
    left_mul,
    multiplication_matrix,
    radius_report,
    resolvent,
    right_mul,
    shift,
    star_inverse,
    star_mul,
)

A = np.array([[1, 2], [3, 4]], dtype=complex)
B = np.array([[0, 1], [1, 0]], dtype=complex)


class TestSeries:
    def test_shapes(self):
        f = MatrixPowerSeries(np.zeros((4, 2, 2)), p=2)
        assert f.order == 3
        assert f.is_square

    def test_block_shaped(self):
        f = MatrixPowerSeries(np.zeros((3, 2, 4)), p=2)
        assert (f.u, f.v) == (1, 2)
        assert not f.is_square

    def test_rejects_bad_blocks(self):
        with pytest.raises(DimensionMismatch):
            MatrixPowerSeries(np.zeros((2, 3, 2)), p=2)

    def test_rejects_nan(self):
        with pytest.raises(InvalidArgument):
            MatrixPowerSeries(np.full((2, 1, 1), np.nan))

    def test_radius_hint_contradicted(self):
        coeffs = np.array([2.0 ** n for n in range(12)]).reshape(-1, 1, 1)
        with pytest.raises(InvalidArgument):
            MatrixPowerSeries(coeffs, radius_hint=10.0)

    def test_coefficient_beyond_order_is_zero(self):
        f = MatrixPowerSeries.identity(2)
        assert_allclose(f.coefficient(5), np.zeros((2, 2)))

    def test_add_rejects_non_series(self):
        with pytest.raises(TypeError):
            MatrixPowerSeries.identity(2) + 1


class TestStarProduct:
    def test_monomials(self):
        out = star_mul(MatrixPowerSeries.monomial(1, A), MatrixPowerSeries.monomial(1, B))
        assert out.order == 2
        assert_allclose(out.coefficient(2), A @ B)
        assert_allclose(out.coefficient(1), np.zeros((2, 2)))

    def test_identity(self, rng):
        f = sampling.random_polynomial(rng, 2, 5)
        assert star_mul(f, MatrixPowerSeries.identity(2)).max_deviation(f) == 0.0

    def test_truncation_cap(self, rng):
        f = sampling.random_polynomial(rng, 2, 5)
        assert star_mul(f, f, max_order=3).order == 3

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            star_mul(MatrixPowerSeries.identity(2), MatrixPowerSeries.identity(3))

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @hsettings(max_examples=20, deadline=None)
    def test_scalar_slice_is_multiplicative(self, seed):
        rng = np.random.default_rng(seed)
        f, g = sampling.random_polynomial(rng, 2, 4), sampling.random_polynomial(rng, 2, 4)
        z = 0.8 * np.exp(2j * np.pi * rng.uniform())
        assert_allclose(eval_scalar(star_mul(f, g), z), eval_scalar(f, z) @ eval_scalar(g, z), atol=1e-12)

    @given(st.integers(min_value=0, max_value=2 ** 31 - 1))
    @hsettings(max_examples=20, deadline=None)
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        f, g, h = (sampling.random_polynomial(rng, 2, 4) for _ in range(3))
        left = star_mul(star_mul(f, g), h)
        assert left.max_deviation(star_mul(f, star_mul(g, h))) <= 1e-12 * max(1.0, left.hardy_norm())


class TestInverse:
    def test_geometric(self):
        f = MatrixPowerSeries(np.stack([np.eye(2), -0.5 * np.eye(2)]), p=2)
        g = star_inverse(f, 6)
        for n in range(7):
            assert_allclose(g.coefficient(n), 0.5 ** n * np.eye(2), atol=1e-14)

    def test_round_trip(self, rng):
        f = sampling.random_polynomial(rng, 2, 4) + MatrixPowerSeries.identity(2)
        g = star_inverse(f, 10)
        check = star_mul(f, g, max_order=10)
        assert_allclose(check.coefficient(0), np.eye(2), atol=1e-12)
        for n in range(1, 11):
            assert np.linalg.norm(check.coefficient(n)) < 1e-10

    def test_singular_leading(self):
        f = MatrixPowerSeries(np.stack([np.diag([1.0, 0.0]), np.eye(2)]), p=2)
        with pytest.raises(SingularLeadingCoefficient):
            star_inverse(f, 4)


class TestEvaluation:
    def test_left_evaluation_order(self):
        f = MatrixPowerSeries(np.stack([np.zeros((2, 2)), B]), p=2)
        a = np.array([[0.1, 0.2], [0.0, 0.3]], dtype=complex)
        assert_allclose(evaluate(f, a), a @ B)

    def test_scalar_matches_evaluate(self, rng):
        f = sampling.random_polynomial(rng, 2, 6)
        z = 0.4 + 0.3j
        assert_allclose(evaluate(f, z * np.eye(2)), eval_scalar(f, z), atol=1e-13)

    def test_outside_convergence(self):
        coeffs = np.stack([np.eye(2)] * 20)
        f = MatrixPowerSeries(coeffs, p=2, radius_hint=1.0)
        with pytest.raises(OutsideConvergence):
            evaluate(f, 1.2 * np.eye(2))

    def test_nilpotent_always_allowed(self):
        coeffs = np.stack([3.0 ** n * np.eye(2) for n in range(10)])
        f = MatrixPowerSeries(coeffs, p=2)
        n = np.array([[0, 1], [0, 0]], dtype=complex)
        assert_allclose(evaluate(f, n), coeffs[0] + n @ coeffs[1])

    def test_right_product(self, rng):
        f, g = sampling.random_polynomial(rng, 2, 5), sampling.random_polynomial(rng, 2, 5)
        a = sampling.with_radius(rng, 2, 0.6)
        assert_allclose(eval_right_product(f, g, a), evaluate(star_mul(f, g), a), atol=1e-12)

    def test_contour_matches_series(self, rng):
        f = sampling.random_polynomial(rng, 2, 5)
        a = sampling.with_radius(rng, 2, 0.5)
        assert_allclose(contour_eval(f, a, 0.8, 128), evaluate(f, a), atol=1e-9)

    def test_contour_radius_order(self, rng):
        f = sampling.random_polynomial(rng, 2, 5)
        with pytest.raises(RadiusOrder):
            contour_eval(f, sampling.with_radius(rng, 2, 0.9), 0.5, 64)


class TestCalculus:
    def test_backward_shift(self):
        f = MatrixPowerSeries(np.stack([A, B, A @ B]), p=2)
        out = backward_shift(f)
        assert out.order == 1
        assert_allclose(out.coefficient(0), B)

    def test_backward_shift_of_constant(self):
        assert np.all(backward_shift(MatrixPowerSeries.identity(2)).coeffs == 0)

    def test_resolvent_at_zero_is_backward_shift(self, rng):
        f = sampling.random_polynomial(rng, 2, 6)
        assert resolvent(f, np.zeros((2, 2))).max_deviation(backward_shift(f)) < 1e-14

    def test_resolvent_equation(self, rng):
        f = sampling.random_polynomial(rng, 2, 8)
        a = sampling.with_radius(rng, 2, 0.7)
        b = sampling.with_radius(rng, 2, 0.7)
        ra, rb = resolvent(f, a), resolvent(f, b)
        rhs = resolvent(left_mul(a, rb) - left_mul(b, rb), a)
        assert (ra - rb).max_deviation(rhs.pad(ra.order)) < 1e-10

    def test_shift_left_right(self, rng):
        f = sampling.random_polynomial(rng, 2, 3)
        assert_allclose(shift(f, 2).coefficient(2), f.coefficient(0))
        assert_allclose(left_mul(A, f).coefficient(1), A @ f.coefficient(1))
        assert_allclose(right_mul(f, A).coefficient(1), f.coefficient(1) @ A)

    def test_integrate(self):
        f = MatrixPowerSeries(np.stack([np.eye(2)] * 4), p=2)
        out = integrate(f)
        assert_allclose(out.coefficient(3), np.eye(2) / 4)

    def test_multiplication_matrix_acts_like_star(self, rng):
        f, g = sampling.random_polynomial(rng, 2, 3), sampling.random_polynomial(rng, 2, 3)
        t = multiplication_matrix(f, 6)
        stacked = t @ g.pad(6).stack()
        assert_allclose(stacked, star_mul(f, g).pad(6).stack(), atol=1e-13)


class TestRadius:
    def test_geometric(self):
        coeffs = np.array([0.5 ** n for n in range(41)]).reshape(-1, 1, 1)
        assert estimate_radius(MatrixPowerSeries(coeffs)) == pytest.approx(2.0, rel=0.05)

    def test_polynomial_is_infinite(self):
        coeffs = np.zeros((10, 1, 1))
        coeffs[:3] = 1.0
        assert math.isinf(estimate_radius(MatrixPowerSeries(coeffs)))

    def test_geometric_interior_is_not_empty(self):
        coeffs = np.array([0.5 ** n for n in range(41)]).reshape(-1, 1, 1)
        assert not radius_report(MatrixPowerSeries(coeffs)).empty_interior

    def test_factorial_growth_flags_empty_interior(self, caplog):
        radii = []
        for order in (10, 20, 40):
            coeffs = np.stack([math.factorial(n) * np.eye(2) for n in range(order + 1)])
            report = radius_report(MatrixPowerSeries(coeffs, p=2))
            assert report.empty_interior
            assert report.radius < report.half_order_radius
            radii.append(report.radius)
        assert radii[0] > radii[1] > radii[2]
        assert radii[2] == pytest.approx(1 / math.factorial(40) ** (1 / 40), rel=1e-9)
        with caplog.at_level("WARNING", logger="app.mps"):
            estimate_radius(MatrixPowerSeries(coeffs, p=2))
        assert "empty-interior" in caplog.text

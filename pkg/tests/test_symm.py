"""
Tests for admissible symmetries and their fixed-point rings
"""
import numpy as np
import pytest

from app import sampling, symm
from app.errors import DimensionMismatch, NotFixed
from app.models import SymmetryKind


def _pairs(rng, n: int, count: int = 6):
    return [(sampling.random_cmat(rng, n), sampling.random_cmat(rng, n)) for _ in range(count)]


class TestSymmetries:
    def test_kinds(self):
        assert symm.quaternionic(1).kind == SymmetryKind.QUATERNIONIC
        assert symm.split(2).n == 4
        assert symm.conjugation(3).is_unitary

    def test_apply_shape(self):
        with pytest.raises(DimensionMismatch):
            symm.apply(symm.quaternionic(1), np.eye(3))

    @pytest.mark.parametrize("make", [symm.quaternionic, symm.split])
    def test_axioms_hold(self, rng, make):
        report = symm.admissible_check(make(2), _pairs(rng, 4))
        assert report.passed, report.violated

    def test_non_unitary_similarity_breaks_adjoint(self, rng):
        phi = symm.custom(np.diag([1.0, 2.0]), similarity=True)
        assert not phi.is_unitary
        report = symm.admissible_check(phi, _pairs(rng, 2))
        assert not report.passed
        assert "adjoint" in report.violated
        assert report.axioms["multiplicative"].passed
        assert report.axioms["adjoint"].witness


class TestEmbeddings:
    def test_quaternion_is_fixed(self, rng):
        a = symm.embed_quaternion(sampling.random_cmat(rng, 2), sampling.random_cmat(rng, 2))
        assert symm.is_fixed(symm.quaternionic(2), a)

    def test_split_is_fixed(self, rng):
        a = symm.embed_split(sampling.random_cmat(rng, 2), sampling.random_cmat(rng, 2))
        assert symm.is_fixed(symm.split(2), a)

    def test_generic_matrix_is_not_fixed(self, rng):
        assert not symm.is_fixed(symm.quaternionic(1), sampling.random_cmat(rng, 2))

    def test_block_shapes(self):
        with pytest.raises(DimensionMismatch):
            symm.embed_split(np.eye(2), np.eye(3))


class TestBlaschke:
    @pytest.mark.parametrize("phi,node", [
        (symm.quaternionic(1), symm.embed_quaternion(0.3, 0.4)),
        (symm.split(1), symm.embed_split(0.3, 0.2)),
    ])
    def test_factor_coefficients_are_fixed(self, phi, node):
        assert symm.blaschke_symmetry_check(phi, node, 20) < 1e-9

    def test_requires_fixed_node(self):
        with pytest.raises(NotFixed) as info:
            symm.blaschke_symmetry_check(symm.quaternionic(1), np.diag([0.5, 0.1]), 10)
        assert info.value.witness["gap"] > 0


def test_closure(rng):
    phi = symm.quaternionic(1)
    a = symm.embed_quaternion(0.2 + 0.1j, 0.3)
    b = symm.embed_quaternion(sampling.random_cmat(rng, 1), sampling.random_cmat(rng, 1))
    for name, value in symm.closure_residuals(phi, a, b).items():
        assert value < 1e-10, name

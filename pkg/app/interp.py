"""
MHK Interpolation Module
Interpolation F(A_j) = B_j in H_2 with matrix nodes: Gram matrix, minimal-norm
solution, the inner divisor Theta, its G-unitary realization and the full
parametrization F = F_min + Theta * G
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app.blaschke import Realization, check_weighted_unitary
from app.errors import DimensionMismatch, GramSingular, InvalidArgument, NodeAtOne
from app.mps import MatrixPowerSeries, evaluate, star_inverse, star_mul, star_product_all
from app.numkit import (
    CMat,
    adjoint,
    as_cmat,
    checked_inverse,
    fro,
    guard_radius,
    hermitian_part,
    parallel_map,
    spectral_radius,
    stein_solve_pair,
)
from app.spaces import hardy_inner

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterpolationData:
    """Nodes A_1..A_N (rho < 1) and target values B_1..B_N"""
    nodes: tuple
    values: tuple

    def __post_init__(self):
        if len(self.nodes) != len(self.values) or not self.nodes:
            raise InvalidArgument("need equally many nodes and values, at least one")
        p = self.nodes[0].shape[0]
        for a, b in zip(self.nodes, self.values):
            if a.shape != (p, p) or b.shape[0] != p:
                raise DimensionMismatch("every node must be p x p and every value have p rows")
            guard_radius(spectral_radius(a), "rho(node)")

    @classmethod
    def of(cls, nodes: Sequence, values: Sequence) -> "InterpolationData":
        return cls(tuple(as_cmat(a, "node") for a in nodes), tuple(as_cmat(b, "value") for b in values))

    @property
    def p(self) -> int:
        return self.nodes[0].shape[0]


@dataclass
class InterpolationSolution:
    """Minimal-norm solution plus everything needed to parametrize the rest"""
    data: InterpolationData
    fmin: MatrixPowerSeries
    gram: CMat
    lambda_min: float
    coeffs: List[CMat]
    theta: Optional[MatrixPowerSeries] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)


# ============== Gram matrix ==============

def structure_operators(nodes: Sequence[CMat]):
    """(A_cal, C_cal) = (diag(A_j^*), [I ... I])"""
    p = nodes[0].shape[0]
    a_cal = sla.block_diag(*[adjoint(a) for a in nodes])
    c_cal = np.hstack([np.eye(p, dtype=np.complex128)] * len(nodes))
    return a_cal, c_cal


def gram(nodes: Sequence[CMat]) -> CMat:
    """
    Block (k, j) = sum_n A_k^n A_j^{*n}, each block one mixed Stein solve.

    Satisfies G - A_cal^* G A_cal = C_cal^* C_cal.
    """
    nodes = [as_cmat(a, "node") for a in nodes]
    p = nodes[0].shape[0]
    for a in nodes:
        if a.shape != (p, p):
            raise DimensionMismatch("all nodes must share one size")
        guard_radius(spectral_radius(a), "rho(node)")
    eye = np.eye(p, dtype=np.complex128)
    pairs = [(k, j) for k in range(len(nodes)) for j in range(k, len(nodes))]
    blocks = parallel_map(lambda kj: stein_solve_pair(nodes[kj[0]], nodes[kj[1]], eye), pairs)
    g = np.zeros((len(nodes) * p, len(nodes) * p), dtype=np.complex128)
    for (k, j), blk in zip(pairs, blocks):
        g[k * p:(k + 1) * p, j * p:(j + 1) * p] = blk
        g[j * p:(j + 1) * p, k * p:(k + 1) * p] = adjoint(blk)
    return hermitian_part(g)


def _gram_checked(nodes: Sequence[CMat]):
    g = gram(nodes)
    eigs = sla.eigvalsh(g)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    if lam_min <= settings.GRAM_PD_RTOL * lam_max:
        raise GramSingular(
            f"Gram matrix is not strictly positive (lambda_min = {lam_min:.3e}); "
            "interpolation nodes too close",
            witness={"lambda_min": lam_min, "lambda_max": lam_max},
        )
    return g, lam_min


def stein_structure_residual(nodes: Sequence[CMat]) -> float:
    g = gram(nodes)
    a_cal, c_cal = structure_operators(nodes)
    return fro(g - adjoint(a_cal) @ g @ a_cal - adjoint(c_cal) @ c_cal)


# ============== Minimal solution ==============

def solve_min(data: InterpolationData, order: int = settings.DEFAULT_ORDER) -> InterpolationSolution:
    """
    Minimal-norm interpolant F_min(Z) = sum_j K(Z, A_j) C_j.

    The C_j solve G stack(C) = stack(B); coefficient n of F_min is
    sum_j A_j^{*n} C_j.
    """
    g, lam_min = _gram_checked(data.nodes)
    rhs = np.vstack(data.values)
    c_stack = sla.solve(g, rhs, assume_a="her")
    p = data.p
    coeffs = [c_stack[j * p:(j + 1) * p] for j in range(len(data.nodes))]

    out = np.zeros((order + 1, p, rhs.shape[1]), dtype=np.complex128)
    for a, c in zip(data.nodes, coeffs):
        term = np.array(c)
        ah = adjoint(a)
        for n in range(order + 1):
            out[n] += term
            term = ah @ term
    fmin = MatrixPowerSeries(out, p=p)
    logger.debug("solve_min: %d nodes, lambda_min(G)=%.3e", len(data.nodes), lam_min)
    return InterpolationSolution(data=data, fmin=fmin, gram=g, lambda_min=lam_min, coeffs=coeffs)


# ============== Theta and its realization ==============

def _unit_resolvent(nodes: Sequence[CMat], a_cal: CMat) -> CMat:
    """(I - A_cal^*)^{-1}, refusing nodes with 1 in the spectrum."""
    for j, a in enumerate(nodes):
        try:
            checked_inverse(np.eye(a.shape[0]) - a, NodeAtOne, f"I - A_{j + 1}")
        except NodeAtOne as exc:
            exc.witness["node_index"] = j
            raise
    return sla.inv(np.eye(a_cal.shape[0]) - adjoint(a_cal))


def psi_realization(nodes: Sequence[CMat]) -> Realization:
    """
    G-unitary realization of Theta.

    A = diag(A_j^*), C = [I ... I],
    B = (I - A) G^{-1} (I - A^*)^{-1} C^*,
    D = I - C G^{-1} (I - A^*)^{-1} C^*,
    weight G. The (I - A) factor in B is what makes
    M^* diag(G, I) M = diag(G, I) hold.
    """
    nodes = [as_cmat(a, "node") for a in nodes]
    g, _ = _gram_checked(nodes)
    a_cal, c_cal = structure_operators(nodes)
    x_prime = sla.solve(g, _unit_resolvent(nodes, a_cal) @ adjoint(c_cal), assume_a="her")
    eye = np.eye(a_cal.shape[0], dtype=np.complex128)
    b = (eye - a_cal) @ x_prime
    d = np.eye(c_cal.shape[0], dtype=np.complex128) - c_cal @ x_prime
    return Realization(a=a_cal, b=b, c=c_cal, d=d, weight=g)


def theta(nodes: Sequence[CMat], order: int = settings.DEFAULT_ORDER) -> MatrixPowerSeries:
    """
    Theta(Z) = I - (I - Z) * C_cal * (I - Z A_cal)^{-*} * X'

    with X' = G^{-1} (I - A_cal^*)^{-1} C_cal^*, assembled from block-wise
    star products. Theta vanishes at every node; psi_realization gives the
    same coefficients through its transfer function.
    """
    nodes = [as_cmat(a, "node") for a in nodes]
    g, _ = _gram_checked(nodes)
    a_cal, c_cal = structure_operators(nodes)
    x_prime = sla.solve(g, _unit_resolvent(nodes, a_cal) @ adjoint(c_cal), assume_a="her")
    p = c_cal.shape[0]
    eye_p = np.eye(p, dtype=np.complex128)
    one_minus_z = MatrixPowerSeries(np.stack([eye_p, -eye_p]), p=p)
    pencil = MatrixPowerSeries(np.stack([np.eye(a_cal.shape[0], dtype=np.complex128), -a_cal]), p=p)
    tail = star_product_all(
        [
            one_minus_z,
            MatrixPowerSeries.constant(c_cal, p=p),
            star_inverse(pencil, order),
            MatrixPowerSeries.constant(x_prime, p=p),
        ],
        max_order=order,
    )
    return MatrixPowerSeries.identity(p, order) - tail.pad(order)


def psi_kernel_residual(nodes: Sequence[CMat], z: complex, w: complex) -> float:
    """
    ||(I - psi(z) psi(w)^*) / (1 - z conj(w)) - C (I - zA)^{-1} G^{-1} (I - conj(w) A^*)^{-1} C^*||_F
    """
    r = psi_realization(nodes)
    eye = np.eye(r.state_dim, dtype=np.complex128)
    lhs = (np.eye(r.d.shape[0]) - r.transfer(z) @ adjoint(r.transfer(w))) / (1 - z * np.conj(w))
    left = r.c @ sla.inv(eye - z * r.a)
    right = sla.inv(eye - np.conj(w) * adjoint(r.a)) @ adjoint(r.c)
    rhs = left @ sla.solve(r.weight, right, assume_a="her")
    return fro(lhs - rhs)


def with_theta(sol: InterpolationSolution, order: Optional[int] = None) -> InterpolationSolution:
    if sol.theta is None:
        sol.theta = theta(sol.data.nodes, sol.fmin.order if order is None else order)
    return sol


# ============== Parametrization ==============

def parametrize(sol: InterpolationSolution, g: MatrixPowerSeries) -> MatrixPowerSeries:
    """F = F_min + Theta * G (orthogonal decomposition)."""
    with_theta(sol)
    if g.p != sol.fmin.p or g.rows != sol.theta.cols or g.cols != sol.fmin.cols:
        raise DimensionMismatch(f"parameter {g!r} does not fit the solution shape")
    order = sol.fmin.order
    return sol.fmin + star_mul(sol.theta, g, max_order=order)


def residuals(sol: InterpolationSolution, g: Optional[MatrixPowerSeries] = None) -> Dict[str, float]:
    """Node residuals of F_min (and of F_min + Theta * G), Theta at the nodes, orthogonality."""
    with_theta(sol)
    out = {
        "fmin": max(fro(evaluate(sol.fmin, a) - b) for a, b in zip(sol.data.nodes, sol.data.values)),
        "theta": max(fro(evaluate(sol.theta, a)) for a in sol.data.nodes),
    }
    if g is not None:
        f = parametrize(sol, g)
        tg = star_mul(sol.theta, g, max_order=sol.fmin.order)
        out["parametrized"] = max(fro(evaluate(f, a) - b) for a, b in zip(sol.data.nodes, sol.data.values))
        denom = max(sol.fmin.hardy_norm() * tg.hardy_norm(), 1e-300)
        out["orthogonality"] = abs(np.trace(hardy_inner(sol.fmin, tg))) / denom
    sol.diagnostics.update(out)
    return out

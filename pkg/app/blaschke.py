"""
MHK Blaschke Module
Blaschke factors U_A, their weighted-unitary realizations, the projection onto
the complement of U_A * H_2, and division by U_A
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app.errors import DimensionMismatch, NotInRange
from app.mps import (
    MatrixPowerSeries,
    evaluate,
    multiplication_matrix,
    right_mul,
    star_inverse,
    star_mul,
)
from app.numkit import (
    CMat,
    adjoint,
    as_cmat,
    fro,
    hermitian_part,
    require_square,
    sqrt_psd,
    stein_solve,
)
from app.spaces import szego_kernel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Realization:
    """
    Colligation (A, B, C, D) with an optional Hermitian positive state weight H.

    Transfer function S(z) = D + z C (I - zA)^{-1} B, i.e. S_0 = D and
    S_{k+1} = C A^k B. With a weight, the colligation is checked against
    M^* diag(H, I) M = diag(H, I).
    """
    a: CMat
    b: CMat
    c: CMat
    d: CMat
    weight: Optional[CMat] = None

    def __post_init__(self):
        x = self.a.shape[0]
        if self.a.shape != (x, x):
            raise DimensionMismatch(f"state operator must be square, got {self.a.shape}")
        if self.b.shape[0] != x or self.c.shape[1] != x:
            raise DimensionMismatch("B rows and C columns must match the state dimension")
        if self.d.shape != (self.c.shape[0], self.b.shape[1]):
            raise DimensionMismatch(f"D must be {self.c.shape[0]}x{self.b.shape[1]}, got {self.d.shape}")
        if self.weight is not None and self.weight.shape != (x, x):
            raise DimensionMismatch("weight must act on the state space")

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    def colligation(self) -> CMat:
        return np.block([[self.a, self.b], [self.c, self.d]])

    def to_series(self, order: int, p: Optional[int] = None) -> MatrixPowerSeries:
        """Taylor coefficients D, CB, CAB, CA^2B, ..."""
        coeffs = np.zeros((order + 1,) + self.d.shape, dtype=np.complex128)
        coeffs[0] = self.d
        if self.state_dim:
            right = np.array(self.b, dtype=np.complex128)
            for k in range(order):
                coeffs[k + 1] = self.c @ right
                right = self.a @ right
        return MatrixPowerSeries(coeffs, p=p)

    def transfer(self, z: complex) -> CMat:
        """S(z) at a scalar point."""
        if not self.state_dim:
            return np.array(self.d, dtype=np.complex128)
        eye = np.eye(self.state_dim, dtype=np.complex128)
        return self.d + z * self.c @ sla.solve(eye - z * self.a, self.b)


@dataclass(frozen=True)
class BlaschkeFactor:
    """
    Blaschke factor vanishing at A

    U_A(Z) = (Z - A) * (I - Z Gamma A^* Gamma^{-1})^{-*} L^{1/2}
           = -A L^{1/2} + sum_{n>=1} Z^n A^{*(n-1)} Gamma^{-1} L^{1/2}
    with Gamma - A Gamma A^* = I and L^{-1} = A^*A + Gamma^{-1}.
    """
    a: CMat
    gamma: CMat
    gamma_inv: CMat
    l: CMat
    l_sqrt: CMat
    series: MatrixPowerSeries

    @property
    def p(self) -> int:
        return self.a.shape[0]

    def coefficients(self, order: int) -> MatrixPowerSeries:
        """U_A through any order, straight from the closed coefficient form."""
        return _closed_form(self.a, self.gamma_inv, self.l_sqrt, order)

    def invariant_residuals(self) -> Dict[str, float]:
        p = self.p
        a = self.a
        return {
            "stein": fro(self.gamma - a @ self.gamma @ adjoint(a) - np.eye(p)),
            "l_inverse": fro(sla.inv(self.l) - adjoint(a) @ a - self.gamma_inv),
            "l_sqrt": fro(self.l_sqrt @ self.l_sqrt - self.l),
        }


def _closed_form(a: CMat, gamma_inv: CMat, l_sqrt: CMat, order: int) -> MatrixPowerSeries:
    p = a.shape[0]
    coeffs = np.zeros((order + 1, p, p), dtype=np.complex128)
    coeffs[0] = -a @ l_sqrt
    term = gamma_inv @ l_sqrt
    ah = adjoint(a)
    for n in range(1, order + 1):
        coeffs[n] = term
        term = ah @ term
    return MatrixPowerSeries(coeffs, p=p)


# ============== Construction ==============

def build(a: CMat, order: int = settings.DEFAULT_ORDER) -> BlaschkeFactor:
    """
    Build U_A to the given order.

    Raises SpectralRadiusTooLarge unless rho(A) < 1.
    """
    a = as_cmat(a, "A")
    require_square(a, "A")
    gamma = stein_solve(a)
    gamma_inv = hermitian_part(sla.inv(gamma))
    l = hermitian_part(sla.inv(adjoint(a) @ a + gamma_inv))
    l_sqrt = sqrt_psd(l)
    series = _closed_form(a, gamma_inv, l_sqrt, order)
    factor = BlaschkeFactor(a=a, gamma=gamma, gamma_inv=gamma_inv, l=l, l_sqrt=l_sqrt, series=series)
    logger.debug("built Blaschke factor p=%d order=%d residuals=%s", a.shape[0], order,
                 factor.invariant_residuals())
    return factor


def realization(bf: BlaschkeFactor) -> Realization:
    """(A^*, Gamma^{-1} L^{1/2}, I, -A L^{1/2}) with weight Gamma."""
    p = bf.p
    return Realization(
        a=adjoint(bf.a),
        b=bf.gamma_inv @ bf.l_sqrt,
        c=np.eye(p, dtype=np.complex128),
        d=-bf.a @ bf.l_sqrt,
        weight=bf.gamma,
    )


def check_weighted_unitary(r: Realization) -> float:
    """||M^* diag(H, I) M - diag(H, I)||_F (H = I when no weight is attached)."""
    x = r.state_dim
    h = np.eye(x, dtype=np.complex128) if r.weight is None else r.weight
    q = r.d.shape[0]
    big = sla.block_diag(h, np.eye(q, dtype=np.complex128))
    m = r.colligation()
    if m.shape[0] != big.shape[0]:
        raise DimensionMismatch("weighted unitarity needs a square colligation")
    return fro(adjoint(m) @ big @ m - big)


def closed_form_discrepancy(bf: BlaschkeFactor, order: Optional[int] = None) -> Dict[str, float]:
    """
    Compare three displayed forms of U_A coefficientwise.

    star:    (Z - A) * (I - Z Gamma A^* Gamma^{-1})^{-*} L^{1/2}
    closed:  -A L^{1/2} + sum Z^n A^{*(n-1)} Gamma^{-1} L^{1/2}
    product: (I - z A^*)^{-1} (z I - A L^{-1}) L^{1/2}

    The first two agree for every A. The product form agrees with them when
    L_A = I, which holds for normal A; otherwise its constant term is
    -A L^{-1/2} instead of -A L^{1/2}.
    """
    order = bf.series.order if order is None else order
    p = bf.p
    a, ah = bf.a, adjoint(bf.a)
    eye = np.eye(p, dtype=np.complex128)

    z_minus_a = MatrixPowerSeries(np.stack([-a, eye]), p=p)
    denom = MatrixPowerSeries(np.stack([eye, -bf.gamma @ ah @ bf.gamma_inv]), p=p)
    star = right_mul(star_mul(z_minus_a, star_inverse(denom, order), max_order=order), bf.l_sqrt)

    geometric = np.zeros((order + 1, p, p), dtype=np.complex128)
    geometric[0] = eye
    for n in range(1, order + 1):
        geometric[n] = ah @ geometric[n - 1]
    linear = MatrixPowerSeries(np.stack([-a @ sla.inv(bf.l), eye]), p=p)
    product = right_mul(star_mul(MatrixPowerSeries(geometric, p=p), linear, max_order=order), bf.l_sqrt)

    closed = bf.coefficients(order)
    return {
        "star_vs_closed": star.max_deviation(closed, order),
        "product_vs_closed": product.max_deviation(closed, order),
        "product_vs_star": product.max_deviation(star, order),
    }


# ============== Projection and division ==============

def project_complement(f: MatrixPowerSeries, a: CMat) -> Tuple[MatrixPowerSeries, CMat]:
    """
    Orthogonal projection onto {K(., A) C}.

    Since K(A, A) = Gamma_A, the coefficient is C = Gamma_A^{-1} F(A).
    """
    a = as_cmat(a, "A")
    gamma = stein_solve(a)
    c = sla.solve(gamma, evaluate(f, a), assume_a="her")
    proj = right_mul(szego_kernel(a, f.order), c)
    return proj, c


def division_buffer(order: int) -> int:
    return int(math.ceil(settings.DIVISION_BUFFER * order))


def divide_blaschke(h: MatrixPowerSeries, bf: BlaschkeFactor,
                    tol: float = settings.DIVISION_TOL) -> MatrixPowerSeries:
    """
    Solve U_A * G = H through the adjoint of the block Toeplitz operator.

    Multiplication by U_A is an isometry, so G = T_U^* H on its range:
    G_n = sum_{m >= n} U_{m-n}^* H_m. The last ceil(DIVISION_BUFFER * N)
    orders are left out of the residual check.

    Raises:
        NotInRange: H(A) != 0, the residual is too large, or ||G|| != ||H||
    """
    if h.p != bf.p or h.rows != bf.p:
        raise DimensionMismatch(f"cannot divide {h!r} by a {bf.p}x{bf.p} Blaschke factor")
    scale = max(1.0, h.hardy_norm())
    at_node = fro(evaluate(h, bf.a))
    if at_node > tol * scale:
        raise NotInRange(
            f"H(A) has norm {at_node:.3e}; H is not in the range of U_A",
            witness={"h_at_a": evaluate(h, bf.a)},
        )

    order = h.order
    u = bf.coefficients(order)
    t = multiplication_matrix(u, order)
    g = MatrixPowerSeries.from_stack(adjoint(t) @ h.stack(), h.rows, h.p)

    keep = order - division_buffer(order)
    back = star_mul(u, g, max_order=order)
    residual = math.sqrt(sum(fro(back.coefficient(n) - h.coefficient(n)) ** 2 for n in range(keep + 1)))
    if residual > tol * scale:
        raise NotInRange(
            f"division residual {residual:.3e} exceeds {tol:.1e}",
            witness={"residual": residual},
        )
    norm_g, norm_h = g.hardy_norm(), h.hardy_norm()
    if abs(norm_g - norm_h) > tol * scale:
        raise NotInRange(
            f"quotient norm {norm_g:.6g} differs from ||H|| = {norm_h:.6g}",
            witness={"norm_g": norm_g, "norm_h": norm_h},
        )
    logger.debug("divide_blaschke order=%d residual=%.3e norm gap=%.3e", order, residual, abs(norm_g - norm_h))
    return g

"""
MHK Algebra Module
Invertibility in the Wiener algebra W_+ via the boundary determinant, and
realization of numerically rational series from their block Hankel matrix
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app.blaschke import Realization
from app.errors import DeterminantVanishes, DimensionMismatch, InvalidArgument, NoRankPlateau
from app.mps import MatrixPowerSeries, star_inverse, star_mul
from app.numkit import CMat, adjoint, fro, parallel_map

logger = logging.getLogger(__name__)

INTERIOR_SAMPLES = 16


@dataclass(frozen=True)
class WienerSeries:
    """Series with summable coefficients; the l1 norm is kept for diagnostics"""
    series: MatrixPowerSeries

    def __post_init__(self):
        if not self.series.is_square:
            raise DimensionMismatch("Wiener inversion needs a p x p series")

    @property
    def l1_norm(self) -> float:
        """sum_n ||F_n|| (spectral norms)"""
        return float(sum(np.linalg.norm(c, 2) for c in self.series.coeffs))

    @property
    def p(self) -> int:
        return self.series.p

    def det_tol(self) -> float:
        return 1e-8 * self.l1_norm ** self.p

    def det_at(self, z: complex) -> complex:
        """det F(z I_p) of the truncation (valid on the closed disk)."""
        acc = np.array(self.series.coeffs[-1])
        for n in range(self.series.order - 1, -1, -1):
            acc = self.series.coeffs[n] + z * acc
        return complex(np.linalg.det(acc))


# ============== Boundary determinant ==============

def det_polynomial(f: WienerSeries) -> np.ndarray:
    """
    Coefficients (lowest degree first) of z -> det F(z I_p) for the truncation.

    The degree is at most N p, so sampling det at M = N p + 1 roots of unity and
    one FFT recovers it exactly up to rounding.
    """
    m = f.series.order * f.p + 1
    points = np.exp(2j * np.pi * np.arange(m) / m)
    values = np.array(parallel_map(f.det_at, list(points)))
    coeffs = np.fft.fft(values) / m
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)
    top = len(coeffs)
    while top > 1 and abs(coeffs[top - 1]) <= 1e-13 * scale:
        top -= 1
    return coeffs[:top]


def boundary_winding(f: WienerSeries, grid: int = settings.CIRCLE_GRID) -> Tuple[int, float]:
    """
    Winding number of det F(e^{i theta}) about 0 and min |det| on the grid.

    For a polynomial truncation the winding number counts zeros inside the disk.
    """
    thetas = 2 * np.pi * np.arange(grid + 1) / grid
    values = np.array(parallel_map(f.det_at, list(np.exp(1j * thetas))))
    phase = np.unwrap(np.angle(values))
    winding = int(round((phase[-1] - phase[0]) / (2 * np.pi)))
    return winding, float(np.min(np.abs(values)))


def wplus_invert(f: WienerSeries, order: Optional[int] = None, circle_grid: int = settings.CIRCLE_GRID,
                 seed: int = settings.SEED) -> MatrixPowerSeries:
    """
    Invert F in W_+ after checking det F(zI) != 0 on the closed disk.

    The gate samples the circle grid, the origin and seeded interior points
    against det_tol = 1e-8 ||F||_l1^p, then requires zero winding of the
    boundary determinant. Interior zeros are located with the roots of the
    determinant polynomial.
    """
    if circle_grid < 8:
        raise InvalidArgument(f"circle grid needs at least 8 points, got {circle_grid}")
    order = f.series.order if order is None else order
    tol = f.det_tol()
    rng = np.random.default_rng(seed)
    radii = np.sqrt(rng.uniform(0.0, 1.0, INTERIOR_SAMPLES))
    interior = radii * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, INTERIOR_SAMPLES))
    circle = np.exp(2j * np.pi * np.arange(circle_grid) / circle_grid)
    points = list(circle) + [0j] + list(interior)
    dets = np.abs(np.array(parallel_map(f.det_at, points)))
    worst = int(np.argmin(dets))
    if dets[worst] <= tol:
        raise DeterminantVanishes(
            f"|det F(zI)| = {dets[worst]:.3e} at z = {points[worst]:.4f}",
            witness={"z": complex(points[worst]), "abs_det": float(dets[worst]), "det_tol": tol},
        )

    winding, _ = boundary_winding(f, circle_grid)
    if winding != 0:
        roots = np.roots(det_polynomial(f)[::-1])
        inside = roots[np.abs(roots) <= 1.0]
        z = complex(inside[np.argmin(np.abs(inside))]) if inside.size else None
        raise DeterminantVanishes(
            f"det F(zI) has {winding} zero(s) inside the unit disk",
            witness={"z": z, "winding": winding},
        )

    g = star_inverse(f.series, order)
    check = star_mul(f.series, g, max_order=order)
    eye = np.eye(f.p, dtype=np.complex128)
    residual = max(fro(check.coefficient(n) - (eye if n == 0 else 0)) for n in range(order + 1))
    if residual > 1e-10 * max(1.0, WienerSeries(g).l1_norm):
        logger.warning("wplus_invert: F * G - I residual %.3e", residual)
    logger.debug("wplus_invert order=%d residual=%.3e |G|_l1=%.4g", order, residual, WienerSeries(g).l1_norm)
    return g


def inversion_residual(f: MatrixPowerSeries, g: MatrixPowerSeries, order: Optional[int] = None) -> float:
    """max_n ||(F * G - I)_n|| through the given order."""
    order = min(f.order, g.order) if order is None else order
    check = star_mul(f, g, max_order=order)
    eye = np.eye(f.rows, dtype=np.complex128)
    return max(fro(check.coefficient(n) - (eye if n == 0 else 0)) for n in range(order + 1))


# ============== Hankel realization ==============

def block_hankel(e: MatrixPowerSeries, size: int, offset: int = 1) -> CMat:
    """Blocks (i, j) = E_{i+j+offset} for 0 <= i, j < size."""
    r, c = e.rows, e.cols
    h = np.zeros((size * r, size * c), dtype=np.complex128)
    for i in range(size):
        for j in range(size):
            h[i * r:(i + 1) * r, j * c:(j + 1) * c] = e.coefficient(i + j + offset)
    return h


def hankel_realize(e: MatrixPowerSeries, tol: float = settings.HANKEL_RTOL) -> Realization:
    """
    Ho-Kalman realization E(Z) = D + sum Z^{n+1} C A^n B.

    The Hankel of E_1 .. E_{2m-1}, m = N // 2, is cut at the rank r where
    sigma_{r+1} / sigma_1 < tol; A comes from the shifted Hankel.
    """
    m = e.order // 2
    if m < 1:
        raise InvalidArgument("Hankel realization needs order >= 2")
    rows, cols = e.rows, e.cols
    d = np.array(e.coeffs[0])
    h = block_hankel(e, m, 1)
    uu, sv, vh = sla.svd(h)
    if sv.size == 0 or sv[0] <= settings.TOL_ABS:
        logger.debug("hankel_realize: zero Hankel, constant series")
        return Realization(a=np.zeros((0, 0), dtype=np.complex128), b=np.zeros((0, cols), dtype=np.complex128),
                           c=np.zeros((rows, 0), dtype=np.complex128), d=d)
    r = int(np.sum(sv >= tol * sv[0]))
    if r >= min(h.shape):
        raise NoRankPlateau(
            f"Hankel of size {h.shape} has no rank plateau below {tol:.1e}",
            witness={"singular_values": sv, "order": e.order},
        )
    root = np.sqrt(sv[:r])
    obs = uu[:, :r] * root
    ctrl = root[:, None] * vh[:r]
    shifted = block_hankel(e, m, 2)
    a = (adjoint(uu[:, :r]) @ shifted @ adjoint(vh[:r])) / np.outer(root, root)
    realization = Realization(a=a, b=ctrl[:, :cols], c=obs[:rows], d=d)
    recon = realization.to_series(2 * m - 1, p=e.p)
    residual = max(fro(recon.coefficient(n) - e.coefficient(n)) for n in range(2 * m))
    logger.debug("hankel_realize: rank %d of %d, sigma ratio %.3e, residual %.3e",
                 r, min(h.shape), sv[r] / sv[0], residual)
    if residual > 10 * tol * sv[0]:
        logger.warning("hankel_realize reconstruction residual %.3e", residual)
    return realization
"""
MHK Spaces Module
Matrix-valued inner products on power series: the Hardy form with its Szego
kernel, the Fock form, weighted forms, and quadrature checks of each
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import numpy.typing as npt
from numpy.polynomial import legendre

from config.settings import settings
from app.errors import DimensionMismatch, InvalidArgument, RadiusOrder
from app.mps import MatrixPowerSeries, eval_scalar
from app.numkit import CMat, adjoint, as_cmat, parallel_map, spectral_radius, guard_radius

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightSequence:
    """
    Weights gamma_0 .. gamma_N of the form sum gamma_n G_n^* F_n

    Hardy: all ones. Fock: n!. Dirichlet: gamma_0 = 0, gamma_n = n.
    Zero weights are allowed, negative ones are not.
    """
    gammas: tuple

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        if g.ndim != 1 or g.size == 0:
            raise InvalidArgument("weights must be a non-empty sequence")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise InvalidArgument("weights must be finite and non-negative")
        if not np.any(g > 0):
            raise InvalidArgument("weights must not all vanish")

    @property
    def order(self) -> int:
        return len(self.gammas) - 1

    def array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.gammas, dtype=float)

    @classmethod
    def hardy(cls, order: int) -> "WeightSequence":
        return cls(tuple([1.0] * (order + 1)))

    @classmethod
    def fock(cls, order: int) -> "WeightSequence":
        return cls(tuple(float(math.factorial(n)) for n in range(order + 1)))

    @classmethod
    def dirichlet(cls, order: int) -> "WeightSequence":
        return cls(tuple(float(n) for n in range(order + 1)))

    @classmethod
    def from_radial_density(cls, density: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
                            order: int, cutoff: float = settings.FOCK_CUTOFF,
                            nodes: int = settings.FOCK_RADIAL) -> "WeightSequence":
        """
        Moments gamma_n = 2 pi int_0^R r^{2n+1} m(r) dr of a radial density m.

        The Gaussian density exp(-r^2)/pi gives the Fock weights n!.
        """
        r, w = _radial_rule(cutoff, nodes)
        m = np.asarray(density(r), dtype=float)
        gammas = [float(2 * np.pi * np.sum(w * r ** (2 * n + 1) * m)) for n in range(order + 1)]
        return cls(tuple(gammas))


def _radial_rule(cutoff: float, nodes: int):
    """Gauss-Legendre nodes and weights on [0, cutoff]."""
    x, w = legendre.leggauss(nodes)
    return cutoff * (x + 1) / 2, w * cutoff / 2


def _check_pair(f: MatrixPowerSeries, g: MatrixPowerSeries) -> None:
    if f.p != g.p or f.cols != g.cols or f.rows != g.rows:
        raise DimensionMismatch(f"inner product needs equal shapes, got {f!r} and {g!r}")


# ============== Inner products ==============

def hardy_inner(f: MatrixPowerSeries, g: MatrixPowerSeries) -> CMat:
    """
    [F, G]_2 = sum G_n^* F_n over the common truncation.

    The scalar inner product is the trace of this matrix.
    """
    _check_pair(f, g)
    n = min(f.order, g.order) + 1
    return np.einsum("nji,njk->ik", g.coeffs[:n].conj(), f.coeffs[:n])


def weighted_inner(f: MatrixPowerSeries, g: MatrixPowerSeries, w: WeightSequence) -> CMat:
    """sum gamma_n G_n^* F_n"""
    _check_pair(f, g)
    n = min(f.order, g.order) + 1
    if w.order + 1 < n:
        raise DimensionMismatch(f"weights cover order {w.order}, series need {n - 1}")
    gam = w.array()[:n]
    return np.einsum("n,nji,njk->ik", gam, g.coeffs[:n].conj(), f.coeffs[:n])


def hardy_norm_sq(f: MatrixPowerSeries) -> float:
    return float(np.real(np.trace(hardy_inner(f, f))))


# ============== Szego kernel ==============

def szego_kernel(w: CMat, order: int) -> MatrixPowerSeries:
    """K(Z, W) = sum Z^n W^{*n} as a series in Z, truncated at the given order."""
    w = as_cmat(w, "W")
    rho = spectral_radius(w)
    guard_radius(rho, "rho(W)")
    p = w.shape[0]
    wh = adjoint(w)
    coeffs = np.empty((order + 1, p, p), dtype=np.complex128)
    coeffs[0] = np.eye(p)
    for n in range(1, order + 1):
        coeffs[n] = coeffs[n - 1] @ wh
    return MatrixPowerSeries(coeffs, p=p)


def kernel_tail_bound(w: CMat, order: int) -> float:
    """rho(W)^{N+1} / (1 - rho(W))"""
    rho = spectral_radius(as_cmat(w, "W"))
    return rho ** (order + 1) / (1.0 - rho)


# ============== Quadrature ==============

def radial_quadrature(f: MatrixPowerSeries, r: float, points: int) -> CMat:
    """
    (1/M) sum F(r e^{i theta_k} I)^* F(r e^{i theta_k} I)

    Equals sum r^{2n} F_n^* F_n exactly when M > 2N.
    """
    if not 0 <= r < 1:
        raise RadiusOrder(f"need 0 <= r < 1, got r={r}", witness={"r": r})
    if points < 2 * (f.order + 1):
        raise InvalidArgument(f"need at least {2 * (f.order + 1)} angles, got {points}")

    def sample(k: int) -> CMat:
        val = eval_scalar(f, r * np.exp(2j * np.pi * k / points))
        return adjoint(val) @ val

    return sum(parallel_map(sample, list(range(points)))) / points


def radial_coefficient_sum(f: MatrixPowerSeries, r: float) -> CMat:
    """sum r^{2n} F_n^* F_n"""
    scale = r ** (2 * np.arange(f.order + 1))
    return np.einsum("n,nji,njk->ik", scale, f.coeffs.conj(), f.coeffs)


def gaussian_quadrature_fock(f: MatrixPowerSeries, radial: int = settings.FOCK_RADIAL,
                             angular: int = settings.FOCK_ANGULAR,
                             cutoff: float = settings.FOCK_CUTOFF) -> CMat:
    """
    (1/pi) double integral of F(zI)^* F(zI) e^{-|z|^2} over the disk of radius `cutoff`.

    Polar grid: Gauss-Legendre in the radius, trapezoid in the angle. Converges
    to weighted_inner(F, F, Fock) as the grid refines and the cutoff grows.
    """
    if f.order + 1 > angular // 2:
        logger.warning("angular grid %d aliases a series of order %d", angular, f.order)
    r_nodes, r_weights = _radial_rule(cutoff, radial)
    thetas = 2 * np.pi * np.arange(angular) / angular
    powers = np.arange(f.order + 1)
    total = np.zeros((f.cols, f.cols), dtype=np.complex128)
    for r, wr in zip(r_nodes, r_weights):
        zs = r * np.exp(1j * thetas)
        # F(z) for every angle at once: sum_n z^n F_n
        vals = np.einsum("kn,nij->kij", zs[:, None] ** powers[None, :], f.coeffs)
        ring = np.einsum("kji,kjl->il", vals.conj(), vals) / angular
        total += wr * r * np.exp(-r * r) * ring
    # (1/pi) * 2pi from the angular average
    return 2.0 * total


def fock_weights_from_gaussian(order: int) -> WeightSequence:
    """Fock weights recovered from the Gaussian density."""
    return WeightSequence.from_radial_density(lambda r: np.exp(-r * r) / np.pi, order)

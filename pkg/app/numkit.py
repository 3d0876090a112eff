"""
MHK Numerical Kernel
Dense complex linear algebra: spectral radius, PSD square roots and tests,
and the (mixed) Stein equation solvers everything else is built on
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import numpy.typing as npt
import scipy.linalg as sla

from config.settings import settings
from app.errors import (
    DimensionMismatch,
    InvalidArgument,
    NotHermitian,
    NotPSD,
    SingularSystem,
    SpectralRadiusTooLarge,
)

logger = logging.getLogger(__name__)

CMat = npt.NDArray[np.complex128]

T = TypeVar("T")


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair"""
    abs: float = settings.TOL_ABS
    rel: float = settings.TOL_REL

    def __post_init__(self):
        if self.abs < 0 or self.rel < 0:
            raise InvalidArgument(f"tolerances must be non-negative, got {self.abs}, {self.rel}")

    def bound(self, scale: float) -> float:
        """Acceptable error for a quantity of the given magnitude"""
        return self.abs + self.rel * scale


DEFAULT_TOL = Tolerance()


# ============== Construction helpers ==============

def as_cmat(value, name: str = "matrix") -> CMat:
    """Coerce to a finite 2-D complex128 array."""
    arr = np.asarray(value, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} has non-finite entries")
    return arr


def require_square(m: CMat, name: str = "matrix") -> int:
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {m.shape}")
    return m.shape[0]


def adjoint(m: CMat) -> CMat:
    return m.conj().T


def hermitian_part(m: CMat) -> CMat:
    return (m + adjoint(m)) / 2


def fro(m: CMat) -> float:
    return float(np.linalg.norm(m))


def check_hermitian(m: CMat, tol: Tolerance = DEFAULT_TOL, name: str = "matrix") -> None:
    drift = fro(m - adjoint(m))
    if drift > tol.bound(fro(m)):
        raise NotHermitian(
            f"{name} is not Hermitian (||M - M*||_F = {drift:.3e})",
            witness={"drift": drift},
        )


def parallel_map(fn: Callable[..., T], items: Sequence) -> List[T]:
    """
    Map over items, threaded when MHK_THREADS > 1.

    Results come back in input order, so outputs stay deterministic.
    """
    workers = max(1, int(settings.THREADS))
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ============== Spectra ==============

def spectral_radius(m: CMat) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    m = as_cmat(m)
    require_square(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(sla.eigvals(m))))


def is_nilpotent(m: CMat) -> bool:
    """
    Detect nilpotent matrices.

    Either the spectral radius is below 1e-12 or A^p vanishes to rounding.
    """
    n = require_square(m)
    if n == 0:
        return True
    scale = max(1.0, fro(m))
    power = np.linalg.matrix_power(m, n)
    if fro(power) <= 1e-13 * scale ** n:
        return True
    return spectral_radius(m) < 1e-12


def is_psd(m: CMat, tol: Tolerance = DEFAULT_TOL) -> Tuple[bool, float]:
    """
    Test positive semidefiniteness.

    Returns:
        (passed, smallest eigenvalue); passed iff lambda_min >= -tol.abs * (1 + ||M||)
    """
    m = as_cmat(m)
    require_square(m)
    check_hermitian(m, tol)
    if m.size == 0:
        return True, 0.0
    h = hermitian_part(m)
    lam_min = float(sla.eigvalsh(h)[0])
    return lam_min >= -tol.abs * (1.0 + np.linalg.norm(h, 2)), lam_min


def min_eig_witness(m: CMat) -> Tuple[float, CMat]:
    """Smallest eigenvalue of the Hermitian part and its eigenvector."""
    w, v = sla.eigh(hermitian_part(m))
    return float(w[0]), v[:, :1]


def sqrt_psd(m: CMat, tol: Tolerance = DEFAULT_TOL) -> CMat:
    """
    Hermitian PSD square root.

    Eigenvalues in [-tol.abs, 0) are clamped to zero; anything more negative is
    an error.
    """
    m = as_cmat(m)
    require_square(m)
    check_hermitian(m, tol)
    w, v = sla.eigh(hermitian_part(m))
    if w.size and w[0] < -tol.abs:
        raise NotPSD(
            f"matrix has eigenvalue {w[0]:.3e} below -{tol.abs:.1e}",
            witness={"lambda_min": float(w[0]), "vector": v[:, :1]},
        )
    clamped = np.clip(w, 0.0, None)
    if np.any(clamped != w):
        logger.debug("sqrt_psd clamped %d eigenvalues", int(np.sum(clamped != w)))
    root = (v * np.sqrt(clamped)) @ adjoint(v)
    return hermitian_part(root)


def psd_factor(m: CMat, rtol: float = settings.RANK_RTOL) -> Tuple[CMat, CMat, npt.NDArray[np.float64]]:
    """
    Rank-truncated eigen-factorization M ~ V diag(lam) V^*.

    Returns:
        (basis V_r Lambda_r^{1/2}, eigenvectors V_r, eigenvalues lam_r)
    """
    w, v = sla.eigh(hermitian_part(m))
    top = float(w[-1]) if w.size else 0.0
    if top <= 0.0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128), v[:, :0], w[:0]
    keep = w > rtol * top
    vr, wr = v[:, keep], w[keep]
    if np.sum(~keep):
        logger.debug("psd_factor truncated %d of %d directions", int(np.sum(~keep)), w.size)
    return vr * np.sqrt(wr), vr, wr


# ============== Stein equations ==============

def guard_radius(rho: float, what: str) -> None:
    if rho >= 1.0 - settings.EPS_MARGIN:
        raise SpectralRadiusTooLarge(
            f"{what} = {rho:.12f} is not below 1 - {settings.EPS_MARGIN:.0e}",
            witness={"spectral_radius": rho},
        )


def stein_solve(a: CMat, tol: Tolerance = DEFAULT_TOL) -> CMat:
    """
    Solve Gamma - A Gamma A^* = I.

    Gamma = sum A^n A^{*n} is Hermitian and dominates the identity.
    """
    a = as_cmat(a, "A")
    p = require_square(a, "A")
    guard_radius(spectral_radius(a), "rho(A)")
    try:
        gamma = sla.solve_discrete_lyapunov(a, np.eye(p, dtype=np.complex128))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"Stein solve failed: {exc}") from exc
    gamma = hermitian_part(gamma)
    residual = fro(gamma - a @ gamma @ adjoint(a) - np.eye(p))
    if residual > tol.bound(fro(gamma)):
        logger.warning("stein_solve residual %.3e, refining with the vectorized solve", residual)
        gamma = hermitian_part(stein_solve_pair(a, a, np.eye(p, dtype=np.complex128), tol))
    return gamma


def stein_solve_pair(a: CMat, b: CMat, rhs: CMat, tol: Tolerance = DEFAULT_TOL) -> CMat:
    """
    Solve the mixed Stein equation X - A X B^* = RHS.

    The equation is vectorized column-major, vec(A X B^*) = (conj(B) kron A) vec(X),
    and solved as one dense linear system.

    Args:
        a: m x m
        b: n x n
        rhs: m x n

    Returns:
        X, m x n
    """
    a = as_cmat(a, "A")
    b = as_cmat(b, "B")
    rhs = as_cmat(rhs, "RHS")
    m = require_square(a, "A")
    n = require_square(b, "B")
    if rhs.shape != (m, n):
        raise DimensionMismatch(f"RHS must be {m}x{n}, got {rhs.shape}")
    guard_radius(spectral_radius(a) * spectral_radius(b), "rho(A)*rho(B)")

    system = np.eye(m * n, dtype=np.complex128) - np.kron(b.conj(), a)
    try:
        vec = sla.solve(system, rhs.reshape(-1, order="F"))
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularSystem(f"Kronecker system is singular: {exc}") from exc
    x = vec.reshape((m, n), order="F")

    residual = fro(x - a @ x @ adjoint(b) - rhs)
    if residual > tol.bound(fro(x)):
        raise SingularSystem(
            f"Stein residual {residual:.3e} exceeds tolerance",
            witness={"residual": residual},
        )
    return x


def stein_series(a: CMat, b: CMat, rhs: CMat, terms: int = 400) -> CMat:
    """Truncated sum of A^n RHS B^{*n}; used as an independent oracle."""
    x = np.zeros_like(rhs, dtype=np.complex128)
    term = np.array(rhs, dtype=np.complex128)
    bh = adjoint(b)
    for _ in range(terms + 1):
        x = x + term
        term = a @ term @ bh
    return x


def block_kron_identity(u: int, a: CMat) -> CMat:
    """I_u kron A: A acting on each p-row block of a (u*p)-row stack."""
    return np.kron(np.eye(u, dtype=np.complex128), a)


def cond(m: CMat) -> float:
    """2-norm condition number (inf when singular)."""
    s = sla.svdvals(m)
    if s.size == 0:
        return 1.0
    return float(np.inf) if s[-1] == 0 else float(s[0] / s[-1])


def checked_inverse(m: CMat, error=SingularSystem, what: str = "matrix",
                    limit: Optional[float] = None) -> CMat:
    """Inverse that refuses ill-conditioned input (condition above COND_LIMIT)."""
    limit = settings.COND_LIMIT if limit is None else limit
    c = cond(m)
    if not np.isfinite(c) or c > limit:
        raise error(f"{what} is numerically singular (cond = {c:.3e})", witness={"cond": c})
    return sla.inv(m)

"""
MHK Matrix Power Series Module
Truncated series F(Z) = sum Z^n F_n in a p x p matrix variable: star product,
left evaluation F(A) = sum A^n F_n, and the shift/resolvent calculus
"""
import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app.errors import (
    DimensionMismatch,
    InvalidArgument,
    OutsideConvergence,
    RadiusOrder,
    SingularLeadingCoefficient,
)
from app.models import RadiusEstimate
from app.numkit import (
    CMat,
    as_cmat,
    block_kron_identity,
    checked_inverse,
    is_nilpotent,
    parallel_map,
    spectral_radius,
)

logger = logging.getLogger(__name__)

RADIUS_LOG_SLACK = 1.0
ZERO_COEFF_RTOL = 1e-14
EMPTY_INTERIOR_RATIO = 0.75


class MatrixPowerSeries:
    """
    Truncated matrix power series F_0 .. F_N.

    Coefficients are stored as one read-only array of shape (N+1, u*p, v*p).
    Square series have u = v = 1; block-shaped series (entries in
    (C^{pxp})^{u x v}) share the same class, and evaluation at A acts with
    A^n on every p-row block.
    """

    __slots__ = ("coeffs", "p", "radius_hint")

    def __init__(self, coeffs, p: Optional[int] = None, radius_hint: Optional[float] = None):
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or arr.shape[0] == 0:
            raise DimensionMismatch(f"coefficients must have shape (N+1, rows, cols), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("series has non-finite coefficients")
        if p is None:
            p = min(arr.shape[1], arr.shape[2]) or 1
        if p <= 0 or arr.shape[1] % p or arr.shape[2] % p:
            raise DimensionMismatch(f"coefficient blocks {arr.shape[1:]} are not multiples of p={p}")
        arr.setflags(write=False)
        self.coeffs = arr
        self.p = int(p)
        self.radius_hint = radius_hint
        if radius_hint is not None and self.order >= 4:
            est = estimate_radius(self)
            if math.isfinite(est) and math.log(est) < math.log(radius_hint) - RADIUS_LOG_SLACK:
                raise InvalidArgument(
                    f"declared radius {radius_hint:.4g} contradicts coefficient growth (estimate {est:.4g})"
                )

    # ---- shape ----

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def rows(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cols(self) -> int:
        return self.coeffs.shape[2]

    @property
    def u(self) -> int:
        return self.rows // self.p

    @property
    def v(self) -> int:
        return self.cols // self.p

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols == self.p

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, n: int) -> CMat:
        return self.coeffs[n]

    def __repr__(self) -> str:
        return f"MatrixPowerSeries(order={self.order}, shape={self.rows}x{self.cols}, p={self.p})"

    # ---- constructors ----

    @classmethod
    def zero(cls, p: int, order: int = 0, u: int = 1, v: int = 1) -> "MatrixPowerSeries":
        return cls(np.zeros((order + 1, u * p, v * p), dtype=np.complex128), p=p)

    @classmethod
    def constant(cls, c, order: int = 0, p: Optional[int] = None) -> "MatrixPowerSeries":
        c = as_cmat(c)
        arr = np.zeros((order + 1,) + c.shape, dtype=np.complex128)
        arr[0] = c
        return cls(arr, p=p)

    @classmethod
    def identity(cls, p: int, order: int = 0) -> "MatrixPowerSeries":
        return cls.constant(np.eye(p), order=order)

    @classmethod
    def monomial(cls, n: int, c, order: Optional[int] = None, p: Optional[int] = None) -> "MatrixPowerSeries":
        """Z^n C"""
        c = as_cmat(c)
        order = n if order is None else order
        arr = np.zeros((order + 1,) + c.shape, dtype=np.complex128)
        if n <= order:
            arr[n] = c
        return cls(arr, p=p)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence["MatrixPowerSeries"]]) -> "MatrixPowerSeries":
        """Assemble a (u*p) x (v*p) series from a u x v grid of p x p series."""
        if not blocks or not blocks[0]:
            raise DimensionMismatch("empty block grid")
        p = blocks[0][0].p
        order = max(s.order for row in blocks for s in row)
        rows = []
        for row in blocks:
            if len(row) != len(blocks[0]):
                raise DimensionMismatch("ragged block grid")
            if any(s.p != p or not s.is_square for s in row):
                raise DimensionMismatch("block entries must be p x p series of a common p")
            rows.append(np.concatenate([s.pad(order).coeffs for s in row], axis=2))
        return cls(np.concatenate(rows, axis=1), p=p)

    def block(self, i: int, j: int) -> "MatrixPowerSeries":
        p = self.p
        return MatrixPowerSeries(self.coeffs[:, i * p:(i + 1) * p, j * p:(j + 1) * p], p=p)

    # ---- truncation ----

    def pad(self, order: int) -> "MatrixPowerSeries":
        if order <= self.order:
            return self.truncate(order)
        extra = np.zeros((order - self.order, self.rows, self.cols), dtype=np.complex128)
        return MatrixPowerSeries(np.concatenate([self.coeffs, extra]), p=self.p, radius_hint=self.radius_hint)

    def truncate(self, order: int) -> "MatrixPowerSeries":
        if order < 0:
            raise InvalidArgument("order must be non-negative")
        if order >= self.order:
            return self
        return MatrixPowerSeries(self.coeffs[: order + 1], p=self.p, radius_hint=self.radius_hint)

    def coefficient(self, n: int) -> CMat:
        """F_n, zero beyond the stored order."""
        if n <= self.order:
            return self.coeffs[n]
        return np.zeros((self.rows, self.cols), dtype=np.complex128)

    def stack(self) -> CMat:
        """Coefficients stacked vertically: ((N+1)*rows) x cols."""
        return self.coeffs.reshape(-1, self.cols)

    @classmethod
    def from_stack(cls, stacked: CMat, rows: int, p: int) -> "MatrixPowerSeries":
        return cls(np.asarray(stacked).reshape(-1, rows, stacked.shape[1]), p=p)

    def adjoint_coefficients(self) -> "MatrixPowerSeries":
        """Series with coefficients F_n^*."""
        return MatrixPowerSeries(np.conj(np.transpose(self.coeffs, (0, 2, 1))), p=self.p)

    # ---- arithmetic (zero extension to the longer order) ----

    def _align(self, other: "MatrixPowerSeries"):
        if not isinstance(other, MatrixPowerSeries):
            raise TypeError(f"cannot combine a series with {type(other).__name__}")
        if other.coeffs.shape[1:] != self.coeffs.shape[1:] or other.p != self.p:
            raise DimensionMismatch(f"cannot combine {self!r} with {other!r}")
        order = max(self.order, other.order)
        return self.pad(order).coeffs, other.pad(order).coeffs, _min_hint(self, other)

    def __add__(self, other):
        a, b, hint = self._align(other)
        return MatrixPowerSeries(a + b, p=self.p, radius_hint=hint)

    def __sub__(self, other):
        a, b, hint = self._align(other)
        return MatrixPowerSeries(a - b, p=self.p, radius_hint=hint)

    def __neg__(self):
        return MatrixPowerSeries(-self.coeffs, p=self.p, radius_hint=self.radius_hint)

    def __mul__(self, scalar):
        if isinstance(scalar, MatrixPowerSeries):
            return NotImplemented
        return MatrixPowerSeries(self.coeffs * complex(scalar), p=self.p, radius_hint=self.radius_hint)

    __rmul__ = __mul__

    def max_deviation(self, other: "MatrixPowerSeries", through: Optional[int] = None) -> float:
        """Largest Frobenius deviation of coefficients 0..through."""
        order = max(self.order, other.order) if through is None else through
        diffs = [np.linalg.norm(self.coefficient(n) - other.coefficient(n)) for n in range(order + 1)]
        return float(max(diffs)) if diffs else 0.0

    def hardy_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _min_hint(*series: MatrixPowerSeries) -> Optional[float]:
    hints = [s.radius_hint for s in series if s.radius_hint is not None]
    if len(hints) != len(series):
        return None
    return min(hints)


def _check_chain(f: MatrixPowerSeries, g: MatrixPowerSeries) -> None:
    if f.p != g.p or f.cols != g.rows:
        raise DimensionMismatch(f"cannot star-multiply {f!r} by {g!r}")


def _check_argument(f: MatrixPowerSeries, a: CMat) -> CMat:
    a = as_cmat(a, "A")
    if a.shape != (f.p, f.p):
        raise DimensionMismatch(f"argument must be {f.p}x{f.p}, got {a.shape}")
    return a


# ============== Radius ==============

def _tail_radius(norms: np.ndarray, n_top: int) -> float:
    if n_top < 4:
        return math.inf
    scale = float(norms[: n_top + 1].max())
    if scale == 0.0:
        return math.inf
    start = n_top - math.ceil(n_top / 2) + 1
    roots = [
        norms[n] ** (1.0 / n)
        for n in range(max(start, 1), n_top + 1)
        if norms[n] > ZERO_COEFF_RTOL * scale
    ]
    if not roots:
        return math.inf
    top = max(roots)
    return math.inf if top == 0 else 1.0 / top


def radius_report(f: MatrixPowerSeries) -> RadiusEstimate:
    """
    Tail estimates at order N and at N // 2.

    A finite estimate that drops below EMPTY_INTERIOR_RATIO of the half-order
    one keeps shrinking with N (F_n = n! I): the series has no open disk of
    convergence and the report is flagged empty_interior.
    """
    norms = np.array([np.linalg.norm(c, 2) for c in f.coeffs])
    full = _tail_radius(norms, f.order)
    half = _tail_radius(norms, f.order // 2)
    empty = math.isfinite(full) and math.isfinite(half) and full < EMPTY_INTERIOR_RATIO * half
    return RadiusEstimate(radius=full, half_order_radius=half, order=f.order, empty_interior=empty)


def estimate_radius(f: MatrixPowerSeries) -> float:
    """
    Convergence radius estimate 1 / max ||F_n||^{1/n} over the tail window.

    The window is the last ceil(N/2) coefficients. Coefficients below
    ZERO_COEFF_RTOL * max ||F_k|| count as zero, so polynomials give inf.
    Series of order below 4 are finite sums and also give inf.
    """
    report = radius_report(f)
    if report.empty_interior:
        logger.warning("empty-interior regime: radius estimate %.4g at N=%d, %.4g at N=%d",
                       report.radius, f.order, report.half_order_radius, f.order // 2)
    return report.radius


def convergence_radius(f: MatrixPowerSeries) -> float:
    """Declared radius when present, otherwise the coefficient estimate."""
    if f.radius_hint is not None:
        return float(f.radius_hint)
    return estimate_radius(f)


def _guard(f: MatrixPowerSeries, a: CMat) -> float:
    rho = spectral_radius(a)
    radius = convergence_radius(f)
    if rho >= radius and not is_nilpotent(a):
        raise OutsideConvergence(
            f"rho(A) = {rho:.6g} is not inside the radius estimate {radius:.6g}",
            witness={"spectral_radius": rho, "radius": radius},
        )
    return rho


def eval_tail_bound(f: MatrixPowerSeries, a: CMat) -> Optional[float]:
    """Truncation bound rho(A)^{N+1} / (1 - rho(A)/R) when a radius is declared."""
    if f.radius_hint is None:
        return None
    rho = spectral_radius(_check_argument(f, a))
    ratio = rho / f.radius_hint
    if ratio >= 1:
        return math.inf
    return rho ** (f.order + 1) / (1.0 - ratio)


# ============== Star product ==============

def star_mul(f: MatrixPowerSeries, g: MatrixPowerSeries, max_order: Optional[int] = None) -> MatrixPowerSeries:
    """
    Star (Cauchy) product: coefficient n = sum_k F_k G_{n-k}.

    Truncated to min(N_F + N_G, max_order).
    """
    _check_chain(f, g)
    cap = settings.MAX_ORDER if max_order is None else max_order
    order = min(f.order + g.order, cap)
    fc, gc = f.coeffs, g.coeffs

    def coefficient(n: int) -> CMat:
        lo = max(0, n - g.order)
        hi = min(n, f.order)
        if lo > hi:
            return np.zeros((f.rows, g.cols), dtype=np.complex128)
        ks = np.arange(lo, hi + 1)
        return np.matmul(fc[ks], gc[n - ks]).sum(axis=0)

    out = parallel_map(coefficient, list(range(order + 1)))
    return MatrixPowerSeries(np.stack(out), p=f.p, radius_hint=_min_hint(f, g))


def star_inverse(f: MatrixPowerSeries, order: Optional[int] = None) -> MatrixPowerSeries:
    """
    Star inverse through the given order.

    G_0 = F_0^{-1}, G_n = -F_0^{-1} sum_{k=1}^{n} F_k G_{n-k}.
    """
    if f.rows != f.cols:
        raise DimensionMismatch("star inverse needs square coefficients")
    order = f.order if order is None else order
    f0_inv = checked_inverse(f.coeffs[0], SingularLeadingCoefficient, "leading coefficient F_0")
    g = np.zeros((order + 1, f.rows, f.cols), dtype=np.complex128)
    g[0] = f0_inv
    for n in range(1, order + 1):
        acc = np.zeros((f.rows, f.cols), dtype=np.complex128)
        for k in range(1, min(n, f.order) + 1):
            acc += f.coeffs[k] @ g[n - k]
        g[n] = -f0_inv @ acc
    return MatrixPowerSeries(g, p=f.p)


# ============== Evaluation ==============

def evaluate(f: MatrixPowerSeries, a: CMat) -> CMat:
    """
    Left evaluation F(A) = sum A^n F_n by Horner's scheme.

    Raises OutsideConvergence unless rho(A) is inside the radius or A is nilpotent.
    """
    a = _check_argument(f, a)
    _guard(f, a)
    ab = block_kron_identity(f.u, a)
    acc = np.array(f.coeffs[-1])
    for n in range(f.order - 1, -1, -1):
        acc = f.coeffs[n] + ab @ acc
    return acc


def eval_scalar(f: MatrixPowerSeries, z: complex) -> CMat:
    """F(z I_p) = sum z^n F_n."""
    z = complex(z)
    radius = convergence_radius(f)
    if abs(z) >= radius:
        raise OutsideConvergence(
            f"|z| = {abs(z):.6g} is not inside the radius estimate {radius:.6g}",
            witness={"z": z, "radius": radius},
        )
    acc = np.array(f.coeffs[-1])
    for n in range(f.order - 1, -1, -1):
        acc = f.coeffs[n] + z * acc
    return acc


def eval_right_product(f: MatrixPowerSeries, g: MatrixPowerSeries, a: CMat) -> CMat:
    """(F * G)(A) computed as sum A^n F(A) G_n."""
    _check_chain(f, g)
    a = _check_argument(f, a)
    _guard(g, a)
    x = evaluate(f, a)
    ab = block_kron_identity(f.u, a)
    acc = x @ g.coeffs[-1]
    for n in range(g.order - 1, -1, -1):
        acc = x @ g.coeffs[n] + ab @ acc
    return acc


def contour_eval(f: MatrixPowerSeries, a: CMat, r: float, points: int) -> CMat:
    """
    Cauchy-integral evaluation on the circle |z| = r.

    Trapezoid rule (1/M) sum (z_k I - A)^{-1} F(z_k I) z_k, z_k = r e^{2 pi i k/M}.
    """
    a = _check_argument(f, a)
    rho = spectral_radius(a)
    radius = convergence_radius(f)
    if not rho < r < radius:
        raise RadiusOrder(
            f"need rho(A) < r < R, got rho(A)={rho:.6g}, r={r:.6g}, R={radius:.6g}",
            witness={"spectral_radius": rho, "r": r, "radius": radius},
        )
    if points < 2 * (f.order + 1):
        raise InvalidArgument(f"need at least {2 * (f.order + 1)} contour points, got {points}")
    ab = block_kron_identity(f.u, a)
    eye = np.eye(f.rows, dtype=np.complex128)

    def sample(k: int) -> CMat:
        z = r * np.exp(2j * np.pi * k / points)
        return sla.solve(z * eye - ab, eval_scalar(f, z)) * z

    return sum(parallel_map(sample, list(range(points)))) / points


# ============== Shift / resolvent calculus ==============

def backward_shift(f: MatrixPowerSeries) -> MatrixPowerSeries:
    """R_0: coefficient n becomes F_{n+1}; constants map to zero."""
    if f.order == 0:
        return MatrixPowerSeries.zero(f.p, 0, f.u, f.v)
    return MatrixPowerSeries(f.coeffs[1:], p=f.p, radius_hint=f.radius_hint)


def resolvent(f: MatrixPowerSeries, a: CMat) -> MatrixPowerSeries:
    """
    R_A F, coefficient k = sum_{n=k+1}^{N} A^{n-1-k} F_n.

    Computed backwards: R_{N-1} = F_N, R_k = F_{k+1} + A R_{k+1}.
    """
    a = _check_argument(f, a)
    _guard(f, a)
    if f.order == 0:
        return MatrixPowerSeries.zero(f.p, 0, f.u, f.v)
    ab = block_kron_identity(f.u, a)
    out = np.zeros((f.order, f.rows, f.cols), dtype=np.complex128)
    out[-1] = f.coeffs[-1]
    for k in range(f.order - 2, -1, -1):
        out[k] = f.coeffs[k + 1] + ab @ out[k + 1]
    return MatrixPowerSeries(out, p=f.p, radius_hint=f.radius_hint)


def shift(f: MatrixPowerSeries, times: int = 1) -> MatrixPowerSeries:
    """M_Z applied `times` times: prepends zero coefficients."""
    if times < 0:
        raise InvalidArgument("shift count must be non-negative")
    zeros = np.zeros((times, f.rows, f.cols), dtype=np.complex128)
    return MatrixPowerSeries(np.concatenate([zeros, f.coeffs]), p=f.p, radius_hint=f.radius_hint)


def left_mul(a: CMat, f: MatrixPowerSeries) -> MatrixPowerSeries:
    """M_A: F_n -> A F_n (a p x p matrix acts on every row block)."""
    a = as_cmat(a, "A")
    if a.shape == (f.p, f.p):
        a = block_kron_identity(f.u, a)
    if a.shape[1] != f.rows:
        raise DimensionMismatch(f"cannot left-multiply {f!r} by a {a.shape} matrix")
    return MatrixPowerSeries(np.matmul(a, f.coeffs), p=f.p, radius_hint=f.radius_hint)


def right_mul(f: MatrixPowerSeries, a: CMat) -> MatrixPowerSeries:
    """F_n -> F_n A."""
    a = as_cmat(a, "A")
    if a.shape[0] != f.cols or a.shape[1] % f.p:
        raise DimensionMismatch(f"cannot right-multiply {f!r} by a {a.shape} matrix")
    return MatrixPowerSeries(np.matmul(f.coeffs, a), p=f.p, radius_hint=f.radius_hint)


def integrate(f: MatrixPowerSeries) -> MatrixPowerSeries:
    """F_n -> F_n / (n+1)."""
    scale = 1.0 / np.arange(1, f.order + 2)
    return MatrixPowerSeries(f.coeffs * scale[:, None, None], p=f.p, radius_hint=f.radius_hint)


def star_product_all(factors: Iterable[MatrixPowerSeries], max_order: Optional[int] = None) -> MatrixPowerSeries:
    """Left-to-right star product of several factors."""
    items: List[MatrixPowerSeries] = list(factors)
    if not items:
        raise InvalidArgument("no factors given")
    acc = items[0]
    for item in items[1:]:
        acc = star_mul(acc, item, max_order)
    return acc


def multiplication_matrix(f: MatrixPowerSeries, order: Optional[int] = None) -> CMat:
    """
    Lower-triangular block Toeplitz matrix of G -> F * G on coefficient stacks.

    Block (i, j) is F_{i-j} for i >= j; size ((N+1)*rows) x ((N+1)*cols).
    """
    order = f.order if order is None else order
    r, c = f.rows, f.cols
    t = np.zeros(((order + 1) * r, (order + 1) * c), dtype=np.complex128)
    for i in range(order + 1):
        for j in range(i + 1):
            if i - j <= f.order:
                t[i * r:(i + 1) * r, j * c:(j + 1) * c] = f.coeffs[i - j]
    return t


# ============== Coefficient stacks ==============

def stack_shift_up(stack: CMat, p: int) -> CMat:
    """R_0 on a stacked coefficient column: block n takes block n+1, the last block is zero."""
    out = np.zeros_like(stack)
    out[:-p] = stack[p:]
    return out


def compress_backward_shift(basis: CMat, p: int, blocks: int) -> Tuple[CMat, float]:
    """
    R_0 in the coordinates of an orthonormal model basis, with the fit residual.

    A full-rank model gets the exact compression. A rank-deficient one is fitted
    on the leading coefficients only, where truncation has not cut R_0 B; the
    residual is ||B[:K] X - (R_0 B)[:K]|| relative to ||B[:K]||.
    """
    dim = basis.shape[1]
    shifted = stack_shift_up(basis, p)
    if dim == basis.shape[0]:
        return sla.solve(basis, shifted), 0.0
    keep = (blocks - int(math.ceil(settings.DIVISION_BUFFER * (blocks - 1)))) * p
    if keep < dim:
        logger.warning("model of dimension %d exceeds %d leading rows; fitting on the full stack", dim, keep)
        keep = basis.shape[0]
    x = sla.lstsq(basis[:keep], shifted[:keep], cond=settings.RANK_RTOL)[0]
    scale = max(float(np.linalg.norm(basis[:keep])), 1e-300)
    return x, float(np.linalg.norm(basis[:keep] @ x - shifted[:keep])) / scale

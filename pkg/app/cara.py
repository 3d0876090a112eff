"""
MHK Caratheodory Module
Caratheodory multipliers: Herglotz synthesis from discrete measures, moment
Toeplitz positivity, the kernel K_Phi, and recovery of the realization
coefficients from the operator range model L(Phi)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app.errors import (
    DimensionMismatch,
    InvalidArgument,
    NotCaraMultiplier,
    NotPSD,
    Phi0NotHermitianAfterSplit,
)
from app.mps import MatrixPowerSeries, compress_backward_shift, evaluate, multiplication_matrix
from app.numkit import (
    CMat,
    adjoint,
    as_cmat,
    check_hermitian,
    fro,
    hermitian_part,
    is_psd,
    min_eig_witness,
    psd_factor,
    stein_solve_pair,
)
from app.schur import KernelGram, assemble_gram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HerglotzData:
    """Imaginary part X = X^* and atoms (t_k, M_k) with M_k >= 0, t_k in [0, 2 pi)"""
    imag_part: CMat
    atoms: Tuple[Tuple[float, CMat], ...] = ()

    def __post_init__(self):
        p = self.imag_part.shape[0]
        check_hermitian(self.imag_part, name="X")
        for t, m in self.atoms:
            if not 0.0 <= t < 2 * math.pi:
                raise InvalidArgument(f"atom angle {t} is outside [0, 2 pi)")
            if m.shape != (p, p):
                raise DimensionMismatch(f"atom mass must be {p}x{p}, got {m.shape}")
            ok, lam = is_psd(m)
            if not ok:
                raise NotPSD(f"atom mass at t={t:.4f} is not PSD", witness={"lambda_min": lam, "t": t})

    @classmethod
    def of(cls, imag_part, atoms: Sequence = ()) -> "HerglotzData":
        return cls(as_cmat(imag_part, "X"), tuple((float(t), as_cmat(m, "M")) for t, m in atoms))

    @property
    def p(self) -> int:
        return self.imag_part.shape[0]

    def moment(self, n: int) -> CMat:
        """T_n = sum_k e^{-i n t_k} M_k."""
        out = np.zeros((self.p, self.p), dtype=np.complex128)
        for t, m in self.atoms:
            out += np.exp(-1j * n * t) * m
        return out


def herglotz_series(data: HerglotzData, order: int = settings.DEFAULT_ORDER) -> MatrixPowerSeries:
    """Phi_0 = iX + T_0 and Phi_n = 2 T_n."""
    coeffs = np.stack([2.0 * data.moment(n) for n in range(order + 1)])
    coeffs[0] = 1j * data.imag_part + data.moment(0)
    return MatrixPowerSeries(coeffs, p=data.p)


# ============== Moment tests ==============

def moment_toeplitz(phi: MatrixPowerSeries, depth: int, split_imaginary: bool = True) -> CMat:
    """
    Block Toeplitz [T_{j-k}] of size (depth+1)p with T_0 = Re Phi_0,
    T_n = Phi_n / 2 and T_{-n} = T_n^*.

    With split_imaginary=False, Phi_0 itself must be Hermitian.
    """
    if not phi.is_square:
        raise DimensionMismatch("moment tests need a p x p series")
    if depth < 0 or depth > phi.order:
        raise InvalidArgument(f"depth must lie in [0, {phi.order}], got {depth}")
    phi0 = np.array(phi.coeffs[0])
    if not split_imaginary and fro(phi0 - adjoint(phi0)) > settings.TOL_ABS * (1.0 + fro(phi0)):
        raise Phi0NotHermitianAfterSplit(
            "Phi_0 is not Hermitian and the imaginary part was not split off",
            witness={"skew_part": (phi0 - adjoint(phi0)) / 2},
        )
    p = phi.p
    moments = [hermitian_part(phi0)] + [phi.coeffs[n] / 2.0 for n in range(1, depth + 1)]
    out = np.zeros(((depth + 1) * p, (depth + 1) * p), dtype=np.complex128)
    for j in range(depth + 1):
        for k in range(depth + 1):
            blk = moments[j - k] if j >= k else adjoint(moments[k - j])
            out[j * p:(j + 1) * p, k * p:(k + 1) * p] = blk
    return out


def moment_check(phi: MatrixPowerSeries, depth: int, split_imaginary: bool = True) -> Tuple[bool, float]:
    """PSD verdict and lambda_min of the moment Toeplitz at the given depth."""
    ok, lam = is_psd(hermitian_part(moment_toeplitz(phi, depth, split_imaginary)))
    logger.debug("moment_check depth=%d lambda_min=%.3e", depth, lam)
    return ok, lam


def is_accretive_at(phi: MatrixPowerSeries, a: CMat) -> Tuple[bool, float]:
    """Phi(A) + Phi(A)^* >= 0 at a single matrix point."""
    value = evaluate(phi, a)
    return is_psd(hermitian_part(value + adjoint(value)))


def cara_kernel_gram(phi: MatrixPowerSeries, points: Sequence[CMat]) -> KernelGram:
    """Blocks K_Phi(A, B) = stein_solve_pair(A, B, Phi(A) + Phi(B)^*)."""
    points = [as_cmat(z, "point") for z in points]
    values = [evaluate(phi, z) for z in points]

    def block(i: int, j: int) -> CMat:
        return stein_solve_pair(points[i], points[j], values[i] + adjoint(values[j]))

    return assemble_gram(points, block)


# ============== Realization recovery ==============

@dataclass
class RecoveryReport:
    """
    C_0 and the compressed R_0 on ran sqrt(T_Phi + T_Phi^*), with residuals of
    both index conventions for Phi_n and both normalizations of Phi_0
    """
    c0: CMat
    r0: CMat
    model_dim: int
    order: int
    checked_through: int
    residuals: Dict[str, float] = field(default_factory=dict)
    invariance_residual: float = 0.0

    @property
    def convention(self) -> str:
        """Convention the model satisfies: 'power_n' (Phi_n = C_0 R_0^n C_0^*) or 'power_n_minus_1'."""
        if self.residuals["power_n"] <= self.residuals["power_n_minus_1"]:
            return "power_n"
        return "power_n_minus_1"

    @property
    def phi0_normalization(self) -> str:
        """'twice_re' (C_0 C_0^* = 2 Re Phi_0) or 'half_re' (C_0 C_0^* = Re Phi_0 / 2)."""
        if self.residuals["phi0_twice_re"] <= self.residuals["phi0_half_re"]:
            return "twice_re"
        return "half_re"

    def predicted(self, n: int) -> CMat:
        """Phi_n from the model under the 'power_n' convention, n >= 1."""
        return self.c0 @ np.linalg.matrix_power(self.r0, n) @ adjoint(self.c0)


def realization_recovery(phi: MatrixPowerSeries, order: int) -> RecoveryReport:
    """
    Model L(Phi) = ran sqrt(T_Phi + T_Phi^*) on the truncated coefficient space.

    C_0 is evaluation at 0 and R_0 is compressed to the model. Residuals are
    reported for Phi_n against C_0 R_0^n C_0^* and C_0 R_0^{n-1} C_0^* for
    1 <= n <= order/2, and for C_0 C_0^* against 2 Re Phi_0 and Re Phi_0 / 2.
    """
    if not phi.is_square:
        raise DimensionMismatch("realization recovery needs a p x p series")
    p = phi.p
    padded = phi.pad(order)
    t = multiplication_matrix(padded, order)
    gram = hermitian_part(t + adjoint(t))
    ok, lam = is_psd(gram)
    if not ok:
        _, vec = min_eig_witness(gram)
        raise NotCaraMultiplier(
            f"T_Phi + T_Phi^* is not PSD (lambda_min = {lam:.3e})",
            witness={"lambda_min": lam, "vector": vec, "order": order},
        )
    basis, _, _ = psd_factor(gram, settings.RANK_RTOL)
    dim = basis.shape[1]
    if dim == 0:
        r0 = np.zeros((0, 0), dtype=np.complex128)
        fit = 0.0
    else:
        r0, fit = compress_backward_shift(basis, p, order + 1)
    c0 = basis[:p]

    re0 = hermitian_part(np.array(padded.coeffs[0]))
    gram0 = c0 @ adjoint(c0)
    top = max(order // 2, 1)
    power_n: List[float] = []
    power_prev: List[float] = []
    for n in range(1, top + 1):
        target = padded.coefficient(n)
        power_n.append(fro(c0 @ np.linalg.matrix_power(r0, n) @ adjoint(c0) - target))
        power_prev.append(fro(c0 @ np.linalg.matrix_power(r0, n - 1) @ adjoint(c0) - target))

    report = RecoveryReport(
        c0=c0,
        r0=r0,
        model_dim=dim,
        order=order,
        checked_through=top,
        residuals={
            "phi0_twice_re": fro(gram0 - 2.0 * re0),
            "phi0_half_re": fro(gram0 - re0 / 2.0),
            "power_n": max(power_n),
            "power_n_minus_1": max(power_prev),
        },
        invariance_residual=fit,
    )
    logger.debug("realization_recovery dim=%d residuals=%s invariance=%.3e",
                 dim, report.residuals, fit)
    return report


def measure_from_series(phi: MatrixPowerSeries, angles: Sequence[float]) -> List[CMat]:
    """
    Least-squares masses M_k at fixed angles from the moments Phi_n / 2.

    Useful to read atoms back off a synthesized Phi when the angles are known.
    """
    p = phi.p
    angles = np.asarray(angles, dtype=float)
    n = np.arange(phi.order + 1)
    design = np.exp(-1j * np.outer(n, angles))
    moments = np.stack([hermitian_part(np.array(phi.coeffs[0]))]
                       + [phi.coeffs[k] / 2.0 for k in range(1, phi.order + 1)])
    flat = moments.reshape(phi.order + 1, p * p)
    masses = sla.lstsq(design, flat)[0]
    return [hermitian_part(m.reshape(p, p)) for m in masses]

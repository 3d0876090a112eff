"""
MHK Schur Module
Schur multipliers: kernel positivity, block Toeplitz contraction, realization
to multiplier, Leech factorization, coisometric colligations extracted from the
operator range model of H(S), and a multiplier that fails off the scalar slice
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app.blaschke import Realization
from app.errors import (
    DimensionMismatch,
    KernelNotPSD,
    NotContraction,
    NotMultiplier,
    RankCollapse,
)
from app.models import CMatModel, MultiplierReport, Verdict, jsonable
from app.mps import (
    MatrixPowerSeries,
    eval_right_product,
    evaluate,
    compress_backward_shift,
    multiplication_matrix,
    stack_shift_up,
    star_mul,
)
from app.numkit import (
    CMat,
    adjoint,
    as_cmat,
    block_kron_identity,
    fro,
    hermitian_part,
    is_psd,
    min_eig_witness,
    parallel_map,
    psd_factor,
    stein_solve_pair,
)
from app.spaces import hardy_inner

logger = logging.getLogger(__name__)


@dataclass
class KernelGram:
    """Block matrix [K(P_i, P_j)] with its positivity verdict"""
    matrix: CMat
    points: List[CMat]
    psd: bool
    min_eig: float
    witness_vector: Optional[CMat] = None

    @property
    def verdict(self) -> Verdict:
        return Verdict.PASS if self.psd else Verdict.FAIL

    def witness(self) -> Dict[str, Any]:
        if self.psd:
            return {}
        return jsonable({"lambda_min": self.min_eig, "vector": self.witness_vector, "points": self.points})


def assemble_gram(points: Sequence[CMat], block) -> KernelGram:
    """Fill [block(i, j)] for j >= i and mirror; blocks are computed in parallel."""
    points = [as_cmat(z, "point") for z in points]
    n = len(points)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    blocks = parallel_map(lambda ij: block(ij[0], ij[1]), pairs)
    q = blocks[0].shape[0]
    g = np.zeros((n * q, n * q), dtype=np.complex128)
    for (i, j), blk in zip(pairs, blocks):
        g[i * q:(i + 1) * q, j * q:(j + 1) * q] = blk
        g[j * q:(j + 1) * q, i * q:(i + 1) * q] = adjoint(blk)
    g = hermitian_part(g)
    ok, lam = is_psd(g)
    vec = None if ok else min_eig_witness(g)[1]
    return KernelGram(matrix=g, points=points, psd=ok, min_eig=lam, witness_vector=vec)


# ============== Kernel tests ==============

def kernel_at(s: MatrixPowerSeries, z: CMat, w: CMat) -> CMat:
    """K_S(Z, W) = sum Z^k (I - S(Z) S(W)^*) W^{*k}, by one mixed Stein solve."""
    sz, sw = evaluate(s, z), evaluate(s, w)
    rhs = np.eye(s.rows, dtype=np.complex128) - sz @ adjoint(sw)
    return stein_solve_pair(block_kron_identity(s.u, z), block_kron_identity(s.u, w), rhs)


def kernel_gram(s: MatrixPowerSeries, points: Sequence[CMat]) -> KernelGram:
    """
    Gram of K_S over the points.

    A Fail disproves the multiplier property; a Pass is evidence only.
    """
    values = [evaluate(s, as_cmat(z)) for z in points]
    eye = np.eye(s.rows, dtype=np.complex128)
    lifted = [block_kron_identity(s.u, as_cmat(z)) for z in points]

    def block(i: int, j: int) -> CMat:
        return stein_solve_pair(lifted[i], lifted[j], eye - values[i] @ adjoint(values[j]))

    return assemble_gram(points, block)


def toeplitz_contraction(s: MatrixPowerSeries, order: int) -> Tuple[float, bool]:
    """Largest singular value of the truncated multiplication matrix; pass iff <= 1 + slack."""
    t = multiplication_matrix(s, order)
    norm = float(sla.svdvals(t)[0]) if t.size else 0.0
    return norm, norm <= 1.0 + settings.CONTRACTION_SLACK


def check_multiplier(s: MatrixPowerSeries, order: int, points: Sequence[CMat] = ()) -> MultiplierReport:
    """Toeplitz test at the given order plus the kernel test on the points."""
    norm, passed = toeplitz_contraction(s, order)
    witness: Dict[str, Any] = {}
    kernel_min = None
    verdict = Verdict.PASS
    if not passed:
        verdict = Verdict.FAIL
        _, _, vh = sla.svd(multiplication_matrix(s, order))
        witness = jsonable({"toeplitz_norm": norm, "order": order, "input_vector": adjoint(vh[:1])})
    if points:
        gram = kernel_gram(s, points)
        kernel_min = gram.min_eig
        if not gram.psd:
            verdict = Verdict.FAIL
            witness.update(gram.witness())
    return MultiplierReport(
        toeplitz_norm=norm,
        toeplitz_pass=passed,
        order=order,
        kernel_min_eig=kernel_min,
        points_tested=[CMatModel.from_array(z) for z in points],
        verdict=verdict,
        witness=witness,
    )


def tilde(s: MatrixPowerSeries) -> MatrixPowerSeries:
    """S~ with coefficients S_n^*."""
    return s.adjoint_coefficients()


def shift_matrix(p: int, order: int) -> CMat:
    """Multiplication matrix of Z I_p."""
    return multiplication_matrix(MatrixPowerSeries.monomial(1, np.eye(p)), order)


# ============== Realizations ==============

def realization_to_series(u: Realization, order: int) -> MatrixPowerSeries:
    """S = D + sum Z^{k+1} C A^k B for a contractive colligation."""
    norm = float(sla.svdvals(u.colligation())[0])
    if norm > 1.0 + settings.REALIZATION_SLACK:
        raise NotContraction(
            f"colligation norm {norm:.12f} exceeds 1",
            witness={"norm": norm},
        )
    return u.to_series(order, p=u.d.shape[0])


def kernel_decomposition_residual(u: Realization, s: MatrixPowerSeries, z: CMat, w: CMat,
                                  order: int) -> float:
    """
    ||K_S(Z, W) - Gamma(Z) Gamma(W)^* - sum_k Lambda_k(Z) (I - U U^*) Lambda_k(W)^*||_F

    Gamma(Z) = sum_k Z^k C A^k and Lambda_k(Z) = Z^k [Z Gamma(Z), I], both summed
    through the given order.
    """
    z, w = as_cmat(z, "Z"), as_cmat(w, "W")
    p = u.c.shape[0]
    if s.rows != p or z.shape != (p, p) or w.shape != (p, p):
        raise DimensionMismatch("kernel decomposition needs p x p points and a p x p multiplier")
    defect = np.eye(u.state_dim + p, dtype=np.complex128) - u.colligation() @ adjoint(u.colligation())

    def gamma(x: CMat) -> CMat:
        acc = np.zeros_like(u.c, dtype=np.complex128)
        term = np.array(u.c, dtype=np.complex128)
        for _ in range(order + 1):
            acc = acc + term
            term = x @ term @ u.a
        return acc

    gz, gw = gamma(z), gamma(w)
    lz = np.hstack([z @ gz, np.eye(p)])
    lw = np.hstack([w @ gw, np.eye(p)])
    total = gz @ adjoint(gw)
    middle = lz @ defect @ adjoint(lw)
    wh = adjoint(w)
    for _ in range(order + 1):
        total = total + middle
        middle = z @ middle @ wh
    return fro(kernel_at(s, z, w) - total)


# ============== Leech factorization ==============

@dataclass
class LeechResult:
    """Factor S with P * S = Q at the sample points"""
    series: MatrixPowerSeries
    realization: Realization
    rank: int
    gram_min_eig: float
    residual: float
    toeplitz_norm: float
    within_tol: bool


def leech_solve(pp: MatrixPowerSeries, qq: MatrixPowerSeries, sample: Sequence[CMat],
                order: int = settings.DEFAULT_ORDER, tol: float = settings.LEECH_TOL) -> LeechResult:
    """
    Leech factorization Q = P * S from samples of the kernel
    K(Z, W) = sum Z^k (P(Z) P(W)^* - Q(Z) Q(W)^*) W^{*k}.

    1. Gram of the kernel over the sample points (mixed Stein solves).
    2. Rank-truncated factorization Gram = L L^*, rows of L give H(W_i).
    3. V maps (H(W)^* W^* x ; P(W)^* x) to (H(W)^* x ; Q(W)^* x) and is zero
       on the complement of its domain.
    4. V = [[A^*, C^*], [B^*, D^*]] and S = D + sum Z^{n+1} C A^n B.

    A sample residual max ||Q(W) - (P * S)(W)|| above tol does not raise: the
    factor is still returned with within_tol False and the caller decides.
    The CLI turns that into exit code 1.

    Raises:
        DimensionMismatch: P and Q differ in shape
        KernelNotPSD: the sampled kernel Gram has a negative eigenvalue
        RankCollapse: the sampled kernel Gram is numerically zero
    """
    if pp.rows != qq.rows or pp.p != qq.p:
        raise DimensionMismatch(f"P {pp!r} and Q {qq!r} must share rows")
    sample = [as_cmat(w, "sample point") for w in sample]
    p = pp.p
    pv = [evaluate(pp, w) for w in sample]
    qv = [evaluate(qq, w) for w in sample]

    def block(i: int, j: int) -> CMat:
        rhs = pv[i] @ adjoint(pv[j]) - qv[i] @ adjoint(qv[j])
        return stein_solve_pair(sample[i], sample[j], rhs)

    gram = assemble_gram(sample, block)
    if not gram.psd:
        raise KernelNotPSD(
            f"Leech kernel is not positive (lambda_min = {gram.min_eig:.3e})",
            witness=gram.witness(),
        )
    top = float(np.max(np.abs(sla.eigvalsh(gram.matrix)))) if gram.matrix.size else 0.0
    if top <= settings.TOL_ABS:
        raise RankCollapse("Leech kernel Gram is numerically zero", witness={"lambda_max": top})

    factor, _, _ = psd_factor(gram.matrix, settings.RANK_RTOL)
    r = factor.shape[1]
    rows_h = [factor[i * p:(i + 1) * p] for i in range(len(sample))]
    domain = np.hstack([np.vstack([adjoint(h) @ adjoint(w), adjoint(pw)])
                        for h, w, pw in zip(rows_h, sample, pv)])
    image = np.hstack([np.vstack([adjoint(h), adjoint(qw)]) for h, qw in zip(rows_h, qv)])
    v = image @ sla.pinv(domain, rtol=math.sqrt(settings.RANK_RTOL))
    v = _clip_to_contraction(v)

    a = adjoint(v[:r, :r])
    c = adjoint(v[:r, r:])
    b = adjoint(v[r:, :r])
    d = adjoint(v[r:, r:])
    realization = Realization(a=a, b=b, c=c, d=d)
    s = realization.to_series(order, p=p)

    residual = max(fro(qw - eval_right_product(pp, s, w)) for w, qw in zip(sample, qv))
    norm, _ = toeplitz_contraction(s, order)
    within = residual <= tol
    if not within:
        logger.warning("leech_solve sample residual %.3e exceeds %.1e", residual, tol)
    logger.debug("leech_solve: %d points, model rank %d, residual %.3e", len(sample), r, residual)
    return LeechResult(series=s, realization=realization, rank=r, gram_min_eig=gram.min_eig,
                       residual=residual, toeplitz_norm=norm, within_tol=within)


def _clip_to_contraction(v: CMat) -> CMat:
    """Cap singular values at 1; rank truncation can leave them a hair above."""
    uu, sv, vh = sla.svd(v, full_matrices=False)
    if sv.size and sv[0] > 1.0:
        logger.debug("clipping partial isometry, top singular value %.3e", sv[0] - 1.0)
        v = (uu * np.minimum(sv, 1.0)) @ vh
    return v


# ============== Coisometric extraction ==============

@dataclass
class ExtractedColligation:
    """
    Colligation [[T, F], [G, H]] on the truncated model of H(S) plus C^p

    The model is ran sqrt(I - T_S T_S^*) with the range norm; coordinates are
    taken in the orthonormal basis V_r Lambda_r^{1/2}.
    """
    t_op: CMat
    f_op: CMat
    g_op: CMat
    h_op: CMat
    model_dim: int
    basis: CMat
    eigvecs: CMat
    eigvals: np.ndarray
    order: int
    reconstruction_residual: float = 0.0
    coisometry_residual: float = 0.0
    extras: Dict[str, float] = field(default_factory=dict)

    def colligation(self) -> CMat:
        return np.block([[self.t_op, self.f_op], [self.g_op, self.h_op]])

    def coordinates(self, stack: CMat) -> CMat:
        """Range-norm coordinates of a coefficient stack lying in the model."""
        return (adjoint(self.eigvecs) @ stack) / np.sqrt(self.eigvals)[:, None]

    def reconstruct(self, n: int) -> CMat:
        """S_n from the colligation: H for n = 0, G T^{n-1} F otherwise."""
        if n == 0:
            return self.h_op
        return self.g_op @ np.linalg.matrix_power(self.t_op, n - 1) @ self.f_op


def coisometric_extract(s: MatrixPowerSeries, order: int) -> ExtractedColligation:
    """
    Coisometric colligation of S read off the truncated de Branges-Rovnyak model.

    T = R_0 compressed to the model, F = coordinates of R_0(S x),
    G = evaluation at 0, H = S_0; then S_{n+1} = G T^n F.
    """
    if not s.is_square:
        raise DimensionMismatch("coisometric extraction needs a p x p multiplier")
    p = s.p
    norm, passed = toeplitz_contraction(s, order)
    if not passed:
        raise NotMultiplier(f"multiplication matrix has norm {norm:.12f} > 1",
                            witness={"toeplitz_norm": norm, "order": order})
    t = multiplication_matrix(s, order)
    defect = hermitian_part(np.eye(t.shape[0]) - t @ adjoint(t))
    basis, vecs, lam = psd_factor(defect, settings.RANK_RTOL)
    dim = basis.shape[1]
    s_pad = s.pad(order)

    if dim == 0:
        t_op = np.zeros((0, 0), dtype=np.complex128)
        f_op = np.zeros((0, p), dtype=np.complex128)
        g_op = np.zeros((p, 0), dtype=np.complex128)
    else:
        t_op = compress_backward_shift(basis, p, order + 1)[0]
        r0s = stack_shift_up(s_pad.stack(), p)
        f_op = (adjoint(vecs) @ r0s) / np.sqrt(lam)[:, None]
        g_op = basis[:p]

    model = ExtractedColligation(t_op=t_op, f_op=f_op, g_op=g_op, h_op=np.array(s_pad.coeffs[0]),
                                 model_dim=dim, basis=basis, eigvecs=vecs, eigvals=lam, order=order)
    top = order // 2
    model.reconstruction_residual = max(
        fro(model.reconstruct(n) - s_pad.coefficient(n)) for n in range(top + 1)
    )
    model.coisometry_residual = _kernel_coisometry(model, s_pad, defect)
    logger.debug("coisometric_extract: dim=%d reconstruction=%.3e coisometry=%.3e",
                 dim, model.reconstruction_residual, model.coisometry_residual)
    return model


KERNEL_POINTS = (0.0, 0.5, -0.5, 0.5j, -0.5j, 0.35 + 0.35j)


def _kernel_coisometry(model: ExtractedColligation, s: MatrixPowerSeries, defect: CMat) -> float:
    """
    ||Q^*(M M^* - I) Q|| on an orthonormal Q spanning K_S(., w) x for the KERNEL_POINTS
    together with C^p.
    """
    p = s.p
    blocks = s.order + 1
    dim = model.model_dim
    cols = []
    for w in KERNEL_POINTS:
        k = np.vstack([(np.conj(w) ** n) * np.eye(p) for n in range(blocks)])
        if dim:
            # coordinates of P k equal Lambda^{1/2} V^* k
            cols.append(np.vstack([np.sqrt(model.eigvals)[:, None] * (adjoint(model.eigvecs) @ k),
                                   np.zeros((p, p))]))
    cols.append(np.vstack([np.zeros((dim, p)), np.eye(p)]))
    basis, _ = sla.qr(np.hstack(cols), mode="economic")
    rank = int(np.sum(np.abs(np.diag(sla.qr(np.hstack(cols), mode="r")[0])) > 1e-10))
    basis = basis[:, :max(rank, p)]
    m = model.colligation()
    gap = m @ adjoint(m) - np.eye(m.shape[0])
    return fro(adjoint(basis) @ gap @ basis)


def range_norm(model: ExtractedColligation, stack: CMat) -> float:
    """de Branges-Rovnyak norm of a coefficient stack in the model."""
    if model.model_dim == 0:
        return 0.0
    return fro(model.coordinates(stack))


def project_to_model(model: ExtractedColligation, stack: CMat) -> CMat:
    """Orthogonal (Euclidean) projection of a stack onto the model's range."""
    return model.eigvecs @ (adjoint(model.eigvecs) @ stack)


def r0_contraction_bounds(s: MatrixPowerSeries, order: int, f_stack: CMat, c: CMat) -> Dict[str, float]:
    """
    Backward-shift inequalities in H(S):

        ||R_0 F||^2 <= ||F||^2 - Tr F(0)^* F(0)
        ||R_0 (S C)||^2 <= ||C||^2 - ||S_0 C||^2

    The trace form Tr(C (I - S_0 S_0^*) C^*) is reported next to the second
    bound; it is not a valid bound in general.
    """
    model = coisometric_extract(s, order)
    p = s.p
    f_stack = project_to_model(model, np.asarray(f_stack, dtype=np.complex128))
    s0 = np.array(s.coeffs[0])
    sc = s.pad(order).stack() @ c
    return {
        "r0f_sq": range_norm(model, stack_shift_up(f_stack, p)) ** 2,
        "f_bound": range_norm(model, f_stack) ** 2 - fro(f_stack[:p]) ** 2,
        "r0sc_sq": range_norm(model, stack_shift_up(sc, p)) ** 2,
        "sc_bound": fro(c) ** 2 - fro(s0 @ c) ** 2,
        "sc_trace_bound": float(np.real(np.trace(c @ (np.eye(p) - s0 @ adjoint(s0)) @ adjoint(c)))),
    }


# ============== Counterexample ==============

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


def counterexample_multiplier() -> MatrixPowerSeries:
    """
    S = (1/sqrt 2) [[Z, J], [Z J, I]] with J = i diag(1, -1), as a 4 x 4 series with p = 2

    Left star multiplication by S is isometric, yet I - S(A) S(A)^* is
    indefinite at the Hadamard unitary.
    """
    j = 1j * np.diag([1.0, -1.0])
    eye = np.eye(2)
    zero = np.zeros((2, 2))
    s0 = np.block([[zero, j], [zero, eye]]) / math.sqrt(2)
    s1 = np.block([[eye, zero], [j, zero]]) / math.sqrt(2)
    return MatrixPowerSeries(np.stack([s0, s1]), p=2)


def counterexample_suite(order: int = 20, seed: int = settings.SEED) -> Dict[str, Any]:
    """Isometry on coefficient sequences, the failing unitary point, and the scalar slice."""
    s = counterexample_multiplier()
    rng = np.random.default_rng(seed)
    f = MatrixPowerSeries(rng.standard_normal((order + 1, 4, 2)) + 1j * rng.standard_normal((order + 1, 4, 2)),
                          p=2)
    sf = star_mul(s, f, max_order=order + 1)
    isometry = fro(hardy_inner(sf, sf) - hardy_inner(f, f))
    isometry_rel = isometry / max(fro(hardy_inner(f, f)), 1e-300)

    s_at = evaluate(s, HADAMARD)
    lam_min = float(sla.eigvalsh(hermitian_part(np.eye(4) - s_at @ adjoint(s_at)))[0])
    j = 1j * np.diag([1.0, -1.0])
    commutation_gap = fro(HADAMARD @ j @ adjoint(HADAMARD) - j)

    slice_max = 0.0
    for radius in (0.0, 0.25, 0.5, 0.75, 0.99, 1.0):
        for k in range(16):
            z = radius * np.exp(2j * np.pi * k / 16)
            # polynomial of degree one, so the closed disk is fine
            value = s.coeffs[0] + z * s.coeffs[1]
            slice_max = max(slice_max, float(np.linalg.norm(value, 2)))
    return {
        "isometry_residual": isometry,
        "isometry_relative": isometry_rel,
        "lambda_min_at_hadamard": lam_min,
        "hadamard_commutation_gap": commutation_gap,
        "slice_max_norm": slice_max,
        "passed": bool(isometry_rel <= 1e-12 and lam_min < -0.1 and slice_max <= 1 + 1e-12),
    }

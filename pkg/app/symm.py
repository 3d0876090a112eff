"""
MHK Symmetry Module
Admissible symmetries A -> J conj(A) J^* on C^{2h x 2h}, their fixed-point
rings (quaternions, split quaternions, bicomplex and hyperbolic numbers through
block embeddings), the axiom battery, and symmetry of Blaschke factors
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from config.settings import settings
from app import blaschke
from app.errors import DimensionMismatch, InvalidArgument, NotFixed, NotPSD
from app.models import AdmissibleReport, AxiomResult, SymmetryKind, jsonable
from app.numkit import (
    CMat,
    Tolerance,
    adjoint,
    as_cmat,
    fro,
    hermitian_part,
    is_psd,
    sqrt_psd,
    stein_solve,
)

logger = logging.getLogger(__name__)

FIXED_TOL = 1e-10
PSD_TOL = Tolerance(abs=1e-12, rel=0.0)


@dataclass(frozen=True)
class Symmetry:
    """
    A -> J conj(A) J^*, or J conj(A) J^{-1} when similarity is set.

    Only unitary J give admissible symmetries; other J are accepted so the
    axiom battery can report what breaks.
    """
    j: CMat
    kind: SymmetryKind = SymmetryKind.CUSTOM
    similarity: bool = False

    def __post_init__(self):
        n = self.j.shape[0]
        if self.j.shape != (n, n):
            raise DimensionMismatch(f"J must be square, got {self.j.shape}")

    @property
    def n(self) -> int:
        return self.j.shape[0]

    @property
    def is_unitary(self) -> bool:
        return fro(adjoint(self.j) @ self.j - np.eye(self.n)) <= settings.TOL_ABS


def _half(h: int) -> Tuple[np.ndarray, np.ndarray]:
    if h < 1:
        raise InvalidArgument(f"block size must be positive, got {h}")
    return np.eye(h), np.zeros((h, h))


def quaternionic(h: int) -> Symmetry:
    """J_1 = [[0, I_h], [-I_h, 0]]."""
    eye, zero = _half(h)
    return Symmetry(np.block([[zero, eye], [-eye, zero]]).astype(np.complex128), SymmetryKind.QUATERNIONIC)


def split(h: int) -> Symmetry:
    """J_2 = [[0, I_h], [I_h, 0]]."""
    eye, zero = _half(h)
    return Symmetry(np.block([[zero, eye], [eye, zero]]).astype(np.complex128), SymmetryKind.SPLIT)


def conjugation(n: int) -> Symmetry:
    """Plain entrywise conjugation (J = I_n)."""
    return Symmetry(np.eye(n, dtype=np.complex128), SymmetryKind.CONJUGATION)


def custom(j, similarity: bool = False) -> Symmetry:
    return Symmetry(as_cmat(j, "J"), SymmetryKind.CUSTOM, similarity)


def apply(phi: Symmetry, a: CMat) -> CMat:
    """A_phi."""
    a = as_cmat(a, "A")
    if a.shape != (phi.n, phi.n):
        raise DimensionMismatch(f"symmetry acts on {phi.n}x{phi.n} matrices, got {a.shape}")
    right = sla.inv(phi.j) if phi.similarity else adjoint(phi.j)
    return phi.j @ np.conj(a) @ right


def is_fixed(phi: Symmetry, a: CMat, tol: float = FIXED_TOL) -> bool:
    return fro(as_cmat(a) - apply(phi, a)) <= tol * max(1.0, fro(as_cmat(a)))


# ============== Embeddings ==============

def _blocks(a1, a2) -> Tuple[CMat, CMat]:
    a1, a2 = as_cmat(a1, "a1"), as_cmat(a2, "a2")
    if a1.shape != a2.shape or a1.shape[0] != a1.shape[1]:
        raise DimensionMismatch(f"embedding blocks must be equal square shapes, got {a1.shape} and {a2.shape}")
    return a1, a2


def embed_quaternion(a1, a2) -> CMat:
    """[[a1, -a2], [conj a2, conj a1]], fixed by J_1."""
    a1, a2 = _blocks(a1, a2)
    return np.block([[a1, -a2], [np.conj(a2), np.conj(a1)]])


def embed_split(a1, a2) -> CMat:
    """
    [[a1, a2], [conj a2, conj a1]], fixed by J_2.

    Real blocks give hyperbolic numbers; commuting blocks give the bicomplex case.
    """
    a1, a2 = _blocks(a1, a2)
    return np.block([[a1, a2], [np.conj(a2), np.conj(a1)]])


# ============== Axioms ==============

def _axiom(violations: List[Tuple[float, Dict]], tol: float) -> AxiomResult:
    if not violations:
        return AxiomResult(passed=True, max_violation=0.0)
    worst, witness = max(violations, key=lambda v: v[0])
    passed = worst <= tol
    return AxiomResult(passed=passed, max_violation=worst, witness={} if passed else jsonable(witness))


def admissible_check(phi: Symmetry, samples: Sequence[Tuple[CMat, CMat]], tol: float = 1e-12) -> AdmissibleReport:
    """
    Check (AB)_phi = A_phi B_phi, (A + B)_phi = A_phi + B_phi, A >= 0 => A_phi >= 0,
    (A_phi)^* = (A^*)_phi and (lambda I)_phi = conj(lambda) I on the samples.

    Derived: sqrt(X_phi) = (sqrt X)_phi on PSD samples and (A^{-1})_phi = (A_phi)^{-1}.
    Violations are measured relative to max(1, size of the operands).
    """
    eye = np.eye(phi.n, dtype=np.complex128)
    mult, add, pos, adj, scal, roots, invs = [], [], [], [], [], [], []
    for a, b in samples:
        a, b = as_cmat(a, "A"), as_cmat(b, "B")
        pa, pb = apply(phi, a), apply(phi, b)
        scale = max(1.0, fro(a) * fro(b))
        mult.append((fro(apply(phi, a @ b) - pa @ pb) / scale, {"A": a, "B": b}))
        add.append((fro(apply(phi, a + b) - pa - pb) / max(1.0, fro(a) + fro(b)), {"A": a, "B": b}))
        x = a @ adjoint(a)
        ok, lam = is_psd(hermitian_part(apply(phi, x)), PSD_TOL)
        pos.append((0.0 if ok else -lam, {"X": x, "lambda_min": lam}))
        adj.append((fro(adjoint(pa) - apply(phi, adjoint(a))) / max(1.0, fro(a)), {"A": a}))
        lam_s = complex(a[0, 0])
        scal.append((fro(apply(phi, lam_s * eye) - np.conj(lam_s) * eye) / max(1.0, abs(lam_s)), {"lambda": lam_s}))
        if ok:
            try:
                roots.append((fro(sqrt_psd(hermitian_part(apply(phi, x))) - apply(phi, sqrt_psd(x)))
                              / max(1.0, fro(x)), {"X": x}))
            except NotPSD as exc:
                roots.append((abs(exc.witness.get("lambda_min", 1.0)), {"X": x}))
        if np.linalg.cond(a) < settings.COND_LIMIT:
            invs.append((fro(apply(phi, sla.inv(a)) - sla.inv(pa)) / max(1.0, fro(sla.inv(a))), {"A": a}))

    report = AdmissibleReport(
        kind=phi.kind,
        samples=len(samples),
        axioms={
            "multiplicative": _axiom(mult, tol),
            "additive": _axiom(add, tol),
            "positivity": _axiom(pos, tol),
            "adjoint": _axiom(adj, tol),
            "scalar": _axiom(scal, tol),
        },
        derived={"sqrt": _axiom(roots, max(tol, 1e-9)), "inverse": _axiom(invs, max(tol, 1e-9))},
    )
    logger.debug("admissible_check %s: violated=%s", phi.kind.value, report.violated)
    return report


# ============== Blaschke factors ==============

def blaschke_symmetry_check(phi: Symmetry, a: CMat, order: int = settings.DEFAULT_ORDER) -> float:
    """max_n ||(U_A)_n phi - (U_A)_n|| for a phi-fixed node A."""
    a = as_cmat(a, "A")
    gap = fro(a - apply(phi, a))
    if gap > FIXED_TOL * max(1.0, fro(a)):
        raise NotFixed(f"node is not fixed by the {phi.kind.value} symmetry (gap {gap:.3e})",
                       witness={"gap": gap, "A": a})
    bf = blaschke.build(a, order)
    return max(fro(apply(phi, c) - c) for c in bf.series.coeffs)


def closure_residuals(phi: Symmetry, a: CMat, b: CMat) -> Dict[str, float]:
    """Fixedness of A + B, A B and Gamma_A for phi-fixed A and B."""
    a, b = as_cmat(a, "A"), as_cmat(b, "B")
    gamma = stein_solve(a)
    return {
        "sum": fro(apply(phi, a + b) - (a + b)),
        "product": fro(apply(phi, a @ b) - a @ b),
        "gamma": fro(apply(phi, gamma) - gamma),
    }

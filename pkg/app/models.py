"""
MHK Pydantic Models
JSON shapes for matrices, series, colligations and verification reports
"""
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from config.settings import settings


class Verdict(str, Enum):
    """Three-valued verdict: Fail is certified, Pass is finite evidence"""
    PASS = "Pass"
    FAIL = "Fail"
    INCONCLUSIVE = "Inconclusive"


class SymmetryKind(str, Enum):
    """Which J defines the conjugation A -> J conj(A) J^*"""
    QUATERNIONIC = "quaternionic"
    SPLIT = "split"
    CONJUGATION = "conjugation"
    CUSTOM = "custom"


# ============== Matrices and series ==============

class CMatModel(BaseModel):
    """Dense complex matrix, row-major [re, im] pairs"""
    rows: int = Field(ge=0)
    cols: int = Field(ge=0)
    data: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_size(self):
        if len(self.data) != self.rows * self.cols:
            raise ValueError(f"data has {len(self.data)} entries, expected {self.rows * self.cols}")
        if not all(math.isfinite(re) and math.isfinite(im) for re, im in self.data):
            raise ValueError("entries must be finite")
        return self

    def to_array(self) -> np.ndarray:
        flat = np.array([complex(re, im) for re, im in self.data], dtype=np.complex128)
        return flat.reshape(self.rows, self.cols)

    @classmethod
    def from_array(cls, m) -> "CMatModel":
        arr = np.atleast_2d(np.asarray(m, dtype=np.complex128))
        return cls(
            rows=arr.shape[0],
            cols=arr.shape[1],
            data=[(float(z.real), float(z.imag)) for z in arr.reshape(-1)],
        )


class SeriesModel(BaseModel):
    """Truncated matrix power series {"p", "order", "coeffs"}"""
    p: int = Field(ge=1)
    order: int = Field(ge=0)
    coeffs: List[CMatModel]
    radius: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def check_coeffs(self):
        if len(self.coeffs) != self.order + 1:
            raise ValueError(f"expected {self.order + 1} coefficients, got {len(self.coeffs)}")
        shapes = {(c.rows, c.cols) for c in self.coeffs}
        if len(shapes) != 1:
            raise ValueError("coefficients must share one shape")
        rows, cols = shapes.pop()
        if rows % self.p or cols % self.p:
            raise ValueError(f"coefficient shape {rows}x{cols} is not made of {self.p}x{self.p} blocks")
        return self

    def to_series(self):
        from app.mps import MatrixPowerSeries
        return MatrixPowerSeries(np.stack([c.to_array() for c in self.coeffs]), p=self.p,
                                 radius_hint=self.radius)

    @classmethod
    def from_series(cls, f) -> "SeriesModel":
        return cls(p=f.p, order=f.order, coeffs=[CMatModel.from_array(c) for c in f.coeffs],
                   radius=f.radius_hint)


class RealizationModel(BaseModel):
    """Colligation (A, B, C, D) with optional state weight"""
    a: CMatModel
    b: CMatModel
    c: CMatModel
    d: CMatModel
    weight: Optional[CMatModel] = None

    def to_realization(self):
        from app.blaschke import Realization
        return Realization(
            a=self.a.to_array(), b=self.b.to_array(), c=self.c.to_array(), d=self.d.to_array(),
            weight=None if self.weight is None else self.weight.to_array(),
        )

    @classmethod
    def from_realization(cls, r) -> "RealizationModel":
        return cls(
            a=CMatModel.from_array(r.a), b=CMatModel.from_array(r.b),
            c=CMatModel.from_array(r.c), d=CMatModel.from_array(r.d),
            weight=None if r.weight is None else CMatModel.from_array(r.weight),
        )


class InterpolationDataModel(BaseModel):
    """Nodes and values of an interpolation problem"""
    nodes: List[CMatModel] = Field(min_length=1)
    values: List[CMatModel] = Field(min_length=1)


class AtomModel(BaseModel):
    t: float = Field(ge=0.0, lt=2 * math.pi)
    m: CMatModel


class HerglotzModel(BaseModel):
    """Imaginary part X and the atoms (t_k, M_k) of a discrete measure"""
    imag_part: CMatModel
    atoms: List[AtomModel] = Field(default_factory=list)


# ============== Reports ==============

class MultiplierReport(BaseModel):
    """Outcome of the Toeplitz and kernel tests for a Schur multiplier"""
    toeplitz_norm: float
    toeplitz_pass: bool
    order: int
    kernel_min_eig: Optional[float] = None
    points_tested: List[CMatModel] = Field(default_factory=list)
    verdict: Verdict
    witness: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def fail_needs_witness(self):
        if self.verdict == Verdict.FAIL and not self.witness:
            raise ValueError("a Fail verdict requires a witness")
        return self


class AxiomResult(BaseModel):
    """One admissibility axiom over a sample set"""
    passed: bool
    max_violation: float
    witness: Dict[str, Any] = Field(default_factory=dict)


class AdmissibleReport(BaseModel):
    """Axioms of an admissible symmetry plus the derived sqrt and inverse checks"""
    kind: SymmetryKind
    samples: int
    axioms: Dict[str, AxiomResult]
    derived: Dict[str, AxiomResult] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.axioms.values()) and all(a.passed for a in self.derived.values())

    @property
    def violated(self) -> List[str]:
        return [name for name, a in {**self.axioms, **self.derived}.items() if not a.passed]


class RadiusEstimate(BaseModel):
    """Tail-window radius estimates at order N and N // 2"""
    radius: float
    half_order_radius: float
    order: int
    empty_interior: bool = False


class CheckResult(BaseModel):
    """Single acceptance check"""
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""


class VerifyReport(BaseModel):
    success: bool = True
    seed: int
    checks: List[CheckResult]


class RunConfig(BaseModel):
    """Per-invocation configuration assembled from settings and CLI flags"""
    order: int = Field(default=settings.DEFAULT_ORDER, ge=4, le=settings.MAX_ORDER)
    tol_abs: float = Field(default=settings.TOL_ABS, ge=0)
    tol_rel: float = Field(default=settings.TOL_REL, ge=0)
    seed: int = settings.SEED
    out: Optional[str] = None


# ============== Serialization ==============

def jsonable(obj: Any) -> Any:
    """Convert arrays, complex numbers, series and colligations into JSON-ready values."""
    from app.blaschke import Realization
    from app.mps import MatrixPowerSeries

    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, MatrixPowerSeries):
        return SeriesModel.from_series(obj).model_dump(mode="json")
    if isinstance(obj, Realization):
        return RealizationModel.from_realization(obj).model_dump(mode="json")
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return CMatModel.from_array(obj).model_dump(mode="json")
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    return obj

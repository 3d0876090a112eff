"""
MHK Errors
Exception hierarchy shared by every module and mapped to CLI exit codes
"""
from typing import Any, Dict, Optional


class MhkError(Exception):
    """
    Base error for the toolkit

    exit_code 1 marks a mathematical failure (a witness is usually attached),
    exit_code 2 marks bad input or usage.
    """

    code: str = "mhk_error"
    exit_code: int = 1

    def __init__(self, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.witness = witness or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "witness": self.witness}


# ============== Input / usage errors ==============

class InputError(MhkError):
    code = "input_error"
    exit_code = 2


class DimensionMismatch(InputError):
    code = "dimension_mismatch"


class InvalidArgument(InputError):
    code = "invalid_argument"


class InputFormatError(InputError):
    code = "input_format"


class NotHermitian(InputError):
    code = "not_hermitian"


class RadiusOrder(InputError):
    code = "radius_order"


# ============== Mathematical failures ==============

class NotPSD(MhkError):
    code = "not_psd"


class SpectralRadiusTooLarge(MhkError):
    code = "spectral_radius_too_large"


class SingularSystem(MhkError):
    code = "singular_system"


class SingularLeadingCoefficient(MhkError):
    code = "singular_leading_coefficient"


class OutsideConvergence(MhkError):
    code = "outside_convergence"


class NotInRange(MhkError):
    code = "not_in_range"


class GramSingular(MhkError):
    code = "gram_singular"


class NodeAtOne(MhkError):
    code = "node_at_one"


class NotContraction(MhkError):
    code = "not_contraction"


class KernelNotPSD(MhkError):
    code = "kernel_not_psd"


class RankCollapse(MhkError):
    code = "rank_collapse"


class NotMultiplier(MhkError):
    code = "not_multiplier"


class Phi0NotHermitianAfterSplit(MhkError):
    code = "phi0_not_hermitian"


class NotCaraMultiplier(MhkError):
    code = "not_cara_multiplier"


class DeterminantVanishes(MhkError):
    code = "determinant_vanishes"


class NoRankPlateau(MhkError):
    code = "no_rank_plateau"


class NotFixed(MhkError):
    code = "not_fixed"

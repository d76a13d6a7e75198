"""Numerical toolkit for noncommutative power series over operator polydomains."""

__version__ = "0.1.0"

from .errors import CertificationError, NcPolydomError, ValidationError
from .polycoeff import NcPolynomial, PolyTuple, b_coefficient, ball_polynomial, poly_tuple, validate_positive_regular
from .domain import OperatorTuple, membership, minkowski_functional
from .fock import TruncatedModel, universal_defect
from .series import FormalSeries, NormBracket, evaluate, homogeneous_norm, model_norm

__all__ = [
    "CertificationError", "NcPolydomError", "ValidationError",
    "NcPolynomial", "PolyTuple", "b_coefficient", "ball_polynomial", "poly_tuple", "validate_positive_regular",
    "OperatorTuple", "membership", "minkowski_functional",
    "TruncatedModel", "universal_defect",
    "FormalSeries", "NormBracket", "evaluate", "homogeneous_norm", "model_norm",
]

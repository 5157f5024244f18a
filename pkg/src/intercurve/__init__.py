"""Numerical verification tools for positive m-intermediate curvature."""

__version__ = "0.1.0"

from .cone import ConeOptions, ConeVerdict, cone_min, kn_rank_one_sum, m_positive
from .exceptions import IntercurveError
from .expr import Jet2, parse
from .manifold import ChartMetric, riemann, second_fundamental_form
from .tensor_core import (
    AlgebraicCurvatureTensor,
    Frame,
    SymmetricForm,
    kulkarni_nomizu,
    partial_sectional_sum,
)

__all__ = [
    "AlgebraicCurvatureTensor",
    "ChartMetric",
    "ConeOptions",
    "ConeVerdict",
    "Frame",
    "IntercurveError",
    "Jet2",
    "SymmetricForm",
    "cone_min",
    "kn_rank_one_sum",
    "kulkarni_nomizu",
    "m_positive",
    "parse",
    "partial_sectional_sum",
    "riemann",
    "second_fundamental_form",
]

"""Uncertainty relations for non-Hermitian operators on finite-dimensional spaces."""

__version__ = "0.1.0"

from .metric import STANDARD, Metric, ScalarProduct, weighted  # noqa: E402,F401
from .uncertainty import (  # noqa: E402,F401
    lemma1_check,
    mean,
    saturation_test,
    triple_report,
    ur_report,
    variance,
)

"""Sobolev and isoperimetric constants under quadratic curvature decay, with numerical checks."""

from .profiles import CurvatureProfile, make_profile, profile_invariants
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = ["CurvatureProfile", "VerificationReport", "make_profile", "profile_invariants", "__version__"]

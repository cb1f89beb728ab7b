"""
Theorem checks assembled from the numerical kernels.
"""

from .base import ScatteringContext, TheoremCheck
from .theorem_lab import CHECKS, TheoremLab

__all__ = ["ScatteringContext", "TheoremCheck", "CHECKS", "TheoremLab"]

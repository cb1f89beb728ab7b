"""
waveop2d - 2D Schrodinger scattering workbench

Stationary and time-dependent wave operators, scattering matrices and the
checks that tie them together, for short-range potentials on a periodic box.
"""

__version__ = "0.1.0"

from .config import RunConfig
from .lab.theorem_lab import TheoremLab

__all__ = ["RunConfig", "TheoremLab", "__version__"]

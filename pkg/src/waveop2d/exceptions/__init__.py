"""
Exceptions module for the waveop2d workbench.
"""

from .workbench_exceptions import (
    WorkbenchException,
    GridException,
    PotentialException,
    SupportException,
    EnergyGridException,
    ResolventException,
    BirmanSchwingerException,
    ScatteringMatrixException,
    DilationException,
    PropagationException,
    SpectralException,
    ProbeException,
    ConfigurationException,
    CacheException,
    ValidationException,
)

__all__ = [
    "WorkbenchException",
    "GridException",
    "PotentialException",
    "SupportException",
    "EnergyGridException",
    "ResolventException",
    "BirmanSchwingerException",
    "ScatteringMatrixException",
    "DilationException",
    "PropagationException",
    "SpectralException",
    "ProbeException",
    "ConfigurationException",
    "CacheException",
    "ValidationException",
]

"""
Custom exception hierarchy for the waveop2d workbench.

Every numerical precondition failure raises a subclass of WorkbenchException
carrying a short code and the numbers that triggered it.
"""

from typing import Any, Dict, Optional


class WorkbenchException(Exception):
    """Base exception for all workbench errors."""

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        context: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code
        self.context = context or {}

    def __str__(self) -> str:
        base = self.message
        if self.code:
            base += f" (Code: {self.code})"
        if self.context:
            base += f" Context: {self.context}"
        return base


class GridException(WorkbenchException):
    """Raised on FFT contract violations, grid mismatches and boundary leakage."""
    pass


class PotentialException(WorkbenchException):
    """Raised when a potential samples to non-finite or invalid values."""
    pass


class SupportException(WorkbenchException):
    """Raised when the support quadrature is empty or exceeds its cap."""
    pass


class EnergyGridException(WorkbenchException):
    """Raised when an energy lies outside the range the grid resolves."""
    pass


class ResolventException(WorkbenchException):
    """Raised when a free resolvent is requested on the real axis."""
    pass


class BirmanSchwingerException(WorkbenchException):
    """Raised when M0(lambda+i0) is too close to singular to invert."""
    pass


class ScatteringMatrixException(WorkbenchException):
    """Raised when S(lambda) cannot be built or its phase cannot be followed."""
    pass


class DilationException(WorkbenchException):
    """Raised when a dilation or Mellin multiplier leaves its log-grid range."""
    pass


class PropagationException(WorkbenchException):
    """Raised when a time propagation would leave the box or is under-resolved."""
    pass


class SpectralException(WorkbenchException):
    """Raised when an eigen-solver or the shooting oracle fails."""
    pass


class ProbeException(WorkbenchException):
    """Raised when a probe family violates its near-orthogonality contract."""
    pass


class ConfigurationException(WorkbenchException):
    """Raised when there are configuration or setup errors."""
    pass


class CacheException(WorkbenchException):
    """Raised when the result cache cannot be read or written."""
    pass


class ValidationException(WorkbenchException):
    """Raised when data validation fails."""
    pass

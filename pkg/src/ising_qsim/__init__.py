"""Statevector simulation of Gibbs-superposition preparation for Ising spin systems."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CapabilityError,
    DegenerateSubspaceError,
    ModelFormatError,
    ResourceLimitError,
)
from .statevec import GateMatrix, StateVector, new_ground  # noqa: F401

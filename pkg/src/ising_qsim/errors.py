"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """A register or enumeration exceeds the configured size cap."""


class CapabilityError(RuntimeError):
    """Requested operation is outside what the implementation precomputes."""


class DegenerateSubspaceError(ValueError):
    """A subspace-selection target has (numerically) zero weight."""


class ModelFormatError(ValueError):
    """A model document does not conform to the documented schema."""

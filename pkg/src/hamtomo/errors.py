"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """Requested system is too large for the dense/desk-scale routes."""


class ScheduleMismatchError(ValueError):
    """Schedule intervals are incompatible with the propagator step."""


class HamiltonianParseError(ValueError):
    """Malformed Hamiltonian document."""


class HamiltonianValidationError(ValueError):
    """Well-formed document with out-of-range or inconsistent content."""


class InsufficientDataError(ValueError):
    """Too few time points for a fit."""


class FitFailure(RuntimeError):
    """Local refinement did not converge."""

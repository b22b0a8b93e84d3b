"""Exception types shared across the package."""


class ProbFwdError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ProbFwdError, ValueError):
    """A parameter is outside its documented domain."""


class EdgeListError(ParameterError):
    """An edge-list stream failed to parse or validate."""


class UndecodableError(ParameterError):
    """Fewer coded packets than data packets: no node can ever decode."""


class BracketError(ProbFwdError):
    """A monotone search target is unattainable on the given interval."""

    def __init__(self, message: str, f_lower: float | None = None,
                 f_upper: float | None = None):
        super().__init__(message)
        self.f_lower = f_lower
        self.f_upper = f_upper


class SubcriticalError(ProbFwdError):
    """A grid prediction fell outside the supercritical range where the
    percolation analysis is valid."""

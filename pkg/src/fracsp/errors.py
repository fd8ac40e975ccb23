"""Exception hierarchy shared by all modules.

Every error carries a machine-readable ``payload`` dict so the command line
front end can serialise failures without parsing messages.
"""

from __future__ import annotations


class FracSPError(Exception):
    """Base class for numerical and construction failures."""

    kind = "error"

    def __init__(self, message: str, **payload):
        super().__init__(message)
        self.payload = {"kind": self.kind, "message": message, **payload}


class DomainError(FracSPError, ValueError):
    """A parameter lies outside the admissible range of an operation."""

    kind = "domain_error"


class ConstructionError(FracSPError, ValueError):
    kind = "construction_error"


class ResolutionError(FracSPError):
    """The grid is too coarse for the requested geometry."""

    kind = "resolution_error"


class DisconnectedError(FracSPError):
    kind = "disconnected"


class ConvergenceError(FracSPError):
    kind = "non_convergence"


class InsufficientDataError(FracSPError, ValueError):
    kind = "insufficient_data"

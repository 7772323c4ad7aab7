"""Exception hierarchy shared by every module."""


class DkpError(Exception):
    """Base class for all library errors."""

    def to_report(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class BadConfig(DkpError, ValueError):
    """Invalid parameters or configuration (message carries the field path)."""


class UnderResolved(DkpError):
    """A sampled profile fails the boundary-decay proxy."""


class CFLViolation(DkpError):
    """Time step exceeds the explicit-transport stability bound."""


class NoConvergence(DkpError):
    """An iterative solver exhausted its budget or its line search."""


class SingularJacobian(NoConvergence):
    """Newton system could not be solved even with the relaxation fallback."""


class DegenerateDerivative(DkpError):
    """Every node of a derivative is below the masking floor."""


class NonMonotone(DkpError):
    """A function that must be inverted is not strictly monotone on its window."""


class FormatError(DkpError):
    """Snapshot sidecar and payload disagree."""

"""Exception types shared across the package."""


class LoccForgeError(Exception):
    """Base class for all package errors."""


class InvalidOperatorError(LoccForgeError):
    """A matrix fails a structural requirement (not square, not Hermitian, empty input)."""


class ZeroOperatorError(LoccForgeError):
    """An operation received a (numerically) zero operator it cannot handle."""


class DimMismatchError(LoccForgeError):
    """Operands live on different-dimensional spaces."""


class InfeasibleError(LoccForgeError):
    """A required linear system has no solution (e.g. no strictly positive weights)."""


class InvalidMeasurementError(LoccForgeError):
    """Input operators fail validation; carries structured diagnostics when available."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class UnboundVariableError(LoccForgeError):
    """A tree label references a variable the assignment does not bind."""


class TreeStructureError(LoccForgeError):
    """A protocol tree violates a structural invariant."""


class SubsetTooSmallError(LoccForgeError):
    """A merge was requested on fewer than two trees."""


class LiftError(LoccForgeError):
    """Kraus lifting failed (missing Kraus data, inconsistent group, bad factorization)."""


class NoKrausDataError(LiftError):
    """The measurement carries no Kraus-level description to lift against."""


class FactorizationFailureError(LiftError):
    """The polar-type unitary factor could not be recovered within tolerance."""


class ParseError(LoccForgeError):
    """A document could not be parsed; message carries location context.

    kind is one of "syntax", "shape", "not-psd", "duplicate-product".
    """

    def __init__(self, message, kind="syntax"):
        super().__init__(message)
        self.kind = kind


class ConfigError(LoccForgeError):
    """Bad configuration file or option value."""

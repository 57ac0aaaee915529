"""Exception types shared across the library.

The CLI maps these onto process exit codes: validation problems exit 2,
verifier failures exit 3, file-format problems exit 4.
"""


class RiskcertError(Exception):
    """Base class for library errors."""


class InvalidInputError(RiskcertError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedNormError(InvalidInputError):
    """Requested (p, q) norm pair is not supported."""


class AccuracyError(RiskcertError, RuntimeError):
    """Quadrature failed to converge; carries the best estimate found."""

    def __init__(self, message, best_estimate):
        super().__init__(message)
        self.best_estimate = best_estimate


class FormatError(RiskcertError, ValueError):
    """A weight file or report artifact is malformed."""


class VerificationError(RiskcertError, RuntimeError):
    """A verifier in the validation suite failed."""

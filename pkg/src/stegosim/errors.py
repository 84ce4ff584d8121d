"""Exception types shared across the package."""


class StegosimError(Exception):
    """Base class for all package errors."""


class ValidationError(StegosimError):
    """Input data or configuration violates a documented invariant."""


class ParseError(ValidationError):
    """A text input could not be parsed.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}: "
        elif path is not None:
            loc += " "
        super().__init__(f"{loc}{message}")


class RangeError(ValidationError):
    """A lookup was requested outside the supported parameter grid."""


class CapacityError(StegosimError):
    """Payload does not fit in the carrier image.

    ``max_payload_bits`` reports the largest payload that would fit.
    """

    def __init__(self, message, max_payload_bits):
        self.max_payload_bits = max_payload_bits
        super().__init__(f"{message} (max payload: {max_payload_bits} bits)")


class FitError(StegosimError):
    """A distribution fit could not be performed on the given data."""


class UndefinedMetricError(StegosimError):
    """A metric is mathematically undefined for the given input."""

"""Exception hierarchy.

The CLI maps :class:`InputError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""


class MetricBoundsError(Exception):
    """Base class for all package errors."""


class InputError(MetricBoundsError, ValueError):
    """Malformed or out-of-range input."""


class DimensionError(InputError):
    """Array shapes that do not line up."""


class EmptyFileError(InputError):
    pass


class RaggedRowError(InputError):
    pass


class NonNumericError(InputError):
    pass


class SplitError(InputError):
    """A random split dropped a class entirely; reseed and retry."""


class NumericalError(MetricBoundsError, ArithmeticError):
    """Non-finite values or a divergent optimisation."""

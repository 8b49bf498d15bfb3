"""Exception hierarchy.

The CLI maps these onto exit codes: configuration problems exit with 2,
resource/budget guards with 3 and numerical failures with 4.
"""


class SfpercError(Exception):
    exit_code = 1


class DomainError(SfpercError, ValueError):
    """An argument lies outside the domain of an operation."""


class DivergenceError(DomainError):
    """A lattice sum or expectation diverges for the given exponents."""


class InfiniteMomentError(DomainError):
    """A required weight moment is infinite."""


class InapplicableBoundError(DomainError):
    """A bound's hypotheses are not met (e.g. infinite second moment)."""


class RegimeError(DomainError):
    """The parameters are outside the regime where a quantity is defined."""


class DegenerateSampleError(DomainError):
    """A sample is too small or too degenerate for an estimator."""


class BracketingError(DomainError):
    """A threshold is not bracketed by the data."""


class ConfigError(SfpercError, ValueError):
    exit_code = 2

    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)


class ResourceError(SfpercError, RuntimeError):
    """A budget or memory guard refused the request."""

    exit_code = 3


class NumericalError(SfpercError, ArithmeticError):
    """Quadrature or summation failed to reach its tolerance."""

    exit_code = 4

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

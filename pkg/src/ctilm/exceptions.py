"""Exception hierarchy.

Validation problems (bad input, bad configuration) derive from
``ValidationError``; failures that only show up while computing derive from
``NumericError``. The command line maps the first family to exit code 1 and
the second to exit code 2.
"""


class CtilmError(Exception):
    """Base class for every error raised by the package."""

    @property
    def code(self):
        return type(self).__name__


class ValidationError(CtilmError, ValueError):
    pass


class NumericError(CtilmError, RuntimeError):
    pass


class ConfigError(ValidationError):
    pass


class MissingMatrix(ValidationError):
    pass


class MissingLocations(ValidationError):
    pass


class ZeroDistanceWithPowerLaw(ValidationError):
    pass


class NegativeCovariate(ValidationError):
    pass


class BetaOutOfRange(ValidationError):
    pass


class InconsistentDimensions(ValidationError):
    pass


class DimensionMismatch(InconsistentDimensions):
    pass


class OrderingViolation(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class InvalidHistory(ValidationError):
    pass


class NoInfected(ValidationError):
    pass


class WrongDatatype(ValidationError):
    pass


class InvalidConfig(ConfigError):
    pass


class EmptyWindow(ValidationError):
    pass


class SingleChain(ValidationError):
    pass


class NotSampled(ValidationError):
    pass


class InitializationError(NumericError):
    pass

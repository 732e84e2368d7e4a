"""Exception hierarchy shared by every module."""


class WeightlabError(Exception):
    """Base class for all package errors."""


class DomainError(WeightlabError, ValueError):
    """Inputs live on incompatible grids or a cube falls outside its grid."""


class ParameterError(WeightlabError, ValueError):
    """A scalar parameter is outside its admissible range."""


class NumericError(WeightlabError, ArithmeticError):
    """A numerical procedure failed to converge or overflowed."""


class DegenerateWeightError(NumericError):
    """A weight vanishes where a constant needs it strictly positive."""


class KernelError(WeightlabError, ValueError):
    """A kernel violates the mean-zero condition on the sphere."""


class ResolutionError(WeightlabError, ValueError):
    """A requested scale cannot be represented on the grid."""


class ConfigError(WeightlabError, ValueError):
    """An experiment configuration is malformed."""

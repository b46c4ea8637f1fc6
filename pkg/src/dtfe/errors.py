"""Exception hierarchy shared by all modules."""


class DTFEError(Exception):
    """Base class for errors raised by this package."""


class TooFewPoints(DTFEError):
    pass


class DegenerateInput(DTFEError):
    pass


class InvalidRate(DTFEError, ValueError):
    pass


class InvalidBound(DTFEError):
    """A sampled candidate exceeded the declared intensity upper bound."""


class DomainError(DTFEError, ValueError):
    pass


class QuadratureFailure(DTFEError):
    pass


class ConfigError(DTFEError, ValueError):
    pass

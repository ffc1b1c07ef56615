"""Exception and warning types raised by levystop.

Every exception carries an ``exit_code`` which the command line front end
returns to the shell.
"""


class LevyStopError(Exception):
    """Base class for all levystop errors"""

    exit_code = 1


class ModelSpecError(LevyStopError, ValueError):
    """Malformed model file or invalid model parameters"""


class UsageError(LevyStopError, ValueError):
    """Incompatible arguments, e.g. a stopping rule that does not match a payoff"""


class DomainError(LevyStopError, ValueError):
    """Argument outside the domain of an operation"""

    exit_code = 2


class PreconditionError(LevyStopError):
    """A stopping problem's standing conditions are not met"""

    exit_code = 2


class UnsupportedModelError(PreconditionError):
    """Operation needs a spectrally negative model"""


class InsufficientSamplesError(PreconditionError):
    """Empirical law too small to average over"""


class NumericalError(LevyStopError, ArithmeticError):
    """Root finding, quadrature or decomposition failed"""

    exit_code = 3


class SingularProfileError(NumericalError):
    """Shepp-Shiryaev profile denominator vanishes"""


class LevyStopWarning(UserWarning):
    """Non-fatal conditions worth surfacing to the user"""

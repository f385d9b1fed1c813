"""Exception hierarchy shared by all modules."""


class SublapError(Exception):
    """Base class for library errors."""


class DomainError(SublapError, ValueError):
    """Argument outside the domain of a special function."""


class ParameterOutOfRange(SublapError, ValueError):
    """A model or operator parameter is outside its admissible range."""


class UnsupportedModel(SublapError):
    """Operation not available for this model kind."""


class PoleError(SublapError, ValueError):
    """Kernel evaluated on its diagonal."""


class NonpositiveTime(SublapError, ValueError):
    """Heat-type kernel evaluated at t <= 0."""


class NonConvergence(SublapError):
    """Quadrature did not reach the requested tolerance.

    Attributes
    ----------
    value, error : float
        Best estimate and its error estimate at the point of failure.
    """

    def __init__(self, msg, value=float("nan"), error=float("inf")):
        super().__init__(msg)
        self.value = value
        self.error = error


class QuadratureFailure(NonConvergence):
    pass


class TailDominates(SublapError):
    """Analytic tail bound exceeds the requested tolerance."""


class CalibrationFailure(SublapError):
    pass


class InvalidScalingData(SublapError, ValueError):
    pass


class ExtrapolationUnstable(SublapError):
    pass


class StencilTooCoarse(SublapError):
    pass


class CrossCheckFailure(SublapError):
    pass


class HypothesisViolated(SublapError):
    pass


class RegimeRejected(SublapError):
    pass


class ConfigError(SublapError, ValueError):
    pass


class UnsupportedFunction(SublapError):
    """The test function lacks the structure an operation needs."""

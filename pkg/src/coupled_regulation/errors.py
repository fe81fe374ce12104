"""Exception hierarchy shared by all modules."""


class CoupledRegulationError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(CoupledRegulationError, ValueError):
    """Input data violates a structural invariant (sign, shape, range)."""


class PreconditionError(CoupledRegulationError, ValueError):
    """Input is well formed but an operation's precondition does not hold."""


class DegeneracyError(CoupledRegulationError):
    """A factorization is numerically degenerate (complex or ill-conditioned)."""


class SynthesisError(CoupledRegulationError):
    """Gain synthesis failed."""


class PlacementError(SynthesisError):
    """Pole placement failed, usually because of an uncontrollable mode."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class NumericalError(SynthesisError):
    """An iterative solver did not reach its residual target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(CoupledRegulationError):
    """A simulation produced a non-finite or runaway state."""

    def __init__(self, message, time=None, record=None):
        super().__init__(message)
        self.time = time
        self.record = record

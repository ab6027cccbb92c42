"""Exception types raised across the package."""


class LevinvError(Exception):
    """Base class for all package errors."""


class InstanceFormatError(LevinvError, ValueError):
    """An instance file is malformed or inconsistent."""


class SingularScaling(LevinvError, ArithmeticError):
    """An entry of s(x) = Ax - b is too close to zero to invert."""

    def __init__(self, index, value, threshold):
        self.index = int(index)
        self.value = float(value)
        self.threshold = float(threshold)
        super().__init__(
            f"|s_{self.index}| = {abs(self.value):.3e} is below {self.threshold:.1e}"
        )


class RankDeficient(LevinvError, ArithmeticError):
    """A matrix expected to have full column rank does not."""


class DomainCrossing(LevinvError):
    """A finite-difference probe left the region where the loss is defined."""


class InvalidStart(LevinvError):
    """A solver was started at a point where the loss is undefined."""


class StepTrapped(LevinvError):
    """Step halving could not find a step that stays inside the domain.

    The partially completed run is attached as ``run``.
    """

    def __init__(self, message, run=None):
        super().__init__(message)
        self.run = run


class SingularHessian(LevinvError, ArithmeticError):
    """The Hessian could not be factorized as positive definite."""

    def __init__(self, message, run=None):
        super().__init__(message)
        self.run = run


class EmptyRun(LevinvError):
    """A run has no iterates to summarize."""

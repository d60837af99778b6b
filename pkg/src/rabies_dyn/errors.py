"""Exception types raised across the package."""


class IntegrationError(RuntimeError):
    """Integration stopped early. ``last_time`` is the last accepted time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


class StepBudgetExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class SingularTransfer(ValueError):
    pass


class NegativeDiscriminant(ArithmeticError):
    pass


class ZeroParameter(ValueError):
    pass


class ZeroR0(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class NegativeEquilibrium(RuntimeError):
    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class NoImprovement(RuntimeError):
    pass


class SingularInformation(ArithmeticError):
    pass


class ConfigError(ValueError):
    pass

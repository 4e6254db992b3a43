"""Exception hierarchy shared by all vsgcc modules."""


class VsgError(Exception):
    """Base class for every error raised by the package."""


class ImproperTransferFunction(VsgError, ValueError):
    pass


class DegenerateOrder(VsgError, ValueError):
    pass


class NumericalFailure(VsgError, ArithmeticError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class SingularEvaluation(VsgError, ArithmeticError):
    """Raised when a frequency response is requested on top of a pole."""

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class DefectivePoles(VsgError, ArithmeticError):
    pass


class SingularInterconnection(VsgError, ValueError):
    pass


class ZeroImpedance(VsgError, ValueError):
    pass


class InfeasibleOperatingPoint(VsgError, ValueError):
    pass


class NoFeasibleGain(VsgError, ValueError):
    pass


class TargetUnreachable(VsgError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InsufficientOscillation(VsgError, ValueError):
    pass


class NonCommensurateWindow(VsgError, ValueError):
    def __init__(self, message, suggested_window=None):
        super().__init__(message)
        self.suggested_window = suggested_window


class UnstableScenario(VsgError, RuntimeError):
    pass


class ConfigError(VsgError, ValueError):
    pass

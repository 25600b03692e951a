"""Exception hierarchy. The CLI maps each class onto its own exit code."""
from typing import Optional


class LoopcoolError(Exception):
    """Base class for every error raised by loopcool"""
    exit_code = 1


class ParameterError(LoopcoolError, ValueError):
    """Physically invalid input (efficiency outside (0, 1], zero frequency, ...)"""
    exit_code = 2


class ConfigError(LoopcoolError):
    """Scenario file violates the schema"""
    exit_code = 2


class InstabilityError(LoopcoolError):
    """Operation needs gamma_m + Gamma_m > 0 but the point is unstable"""
    exit_code = 3

    def __init__(self, message: str, margin: Optional[float] = None):
        super().__init__(message)
        self.margin = margin


class NumericalError(LoopcoolError):
    exit_code = 5


class SingularResponseError(NumericalError):
    """A(omega) + i*omega*I is singular: an instability pole sits on the real axis"""

    def __init__(self, omega: float, condition: float):
        super().__init__(
            f"Singular response matrix at omega={omega:.6g} rad/s (cond={condition:.3g})"
        )
        self.omega = omega
        self.condition = condition


class ConvergenceError(NumericalError):
    """Adaptive integration did not converge"""


class NoStableRegionError(NumericalError):
    """Optimizer grid scan found no point with sufficient stability margin"""


class NoBackactionCoolingError(ParameterError):
    """Dynamical backaction baseline requested at zero detuning"""


class CalibrationError(LoopcoolError):
    """Calibration gives an inconsistent (negative) phonon number"""
    exit_code = 6

    def __init__(self, message: str, n_bar: Optional[float] = None):
        super().__init__(message)
        self.n_bar = n_bar

"""
Physical constants and unit conversions shared across the package.

Everything inside the package works in angular units (rad/s) and radians.
Conversions from the Hz / degree values used in config files happen here.
"""
import math
from typing import Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import hbar as HBAR
from scipy.constants import k as KB


ArrayLike = Union[float, np.ndarray]


def hz_to_rad(value: ArrayLike) -> ArrayLike:
    return 2.0 * math.pi * value


def rad_to_hz(value: ArrayLike) -> ArrayLike:
    return value / (2.0 * math.pi)


def wavelength_to_omega(wavelength_nm: float) -> float:
    """Laser angular frequency for a vacuum wavelength given in nm."""
    return 2.0 * math.pi * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


def bose_occupation(omega: ArrayLike, temperature: float) -> ArrayLike:
    """
    Bose-Einstein occupation n_B(omega) = 1 / (exp(hbar*omega / k_B T) - 1).

    Args:
        omega: Angular frequency (rad/s), must be > 0
        temperature: Bath temperature (K); T = 0 gives 0

    Returns:
        Occupation with the same shape as omega
    """
    if temperature <= 0.0:
        return np.zeros_like(omega, dtype=float) if isinstance(omega, np.ndarray) else 0.0
    x = HBAR * np.asarray(omega, dtype=float) / (KB * temperature)
    n = 1.0 / np.expm1(x)
    return n if isinstance(omega, np.ndarray) else float(n)


def temperature_for_occupation(n_th: float, omega: float) -> float:
    """Inverse of bose_occupation: the bath temperature giving n_th at omega."""
    if n_th <= 0.0:
        return 0.0
    return HBAR * omega / (KB * math.log1p(1.0 / n_th))


def wrap_phase(phi: float) -> float:
    """Map an angle onto (-pi, pi]."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped

"""
Measurement-based feedback on the same mechanics, for comparison with the
coherent loop: a phase-quadrature measurement of the first cavity output is
filtered and applied back as a force.

All treatments here are on cavity resonance (detuning = 0).
"""
import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Tuple

import numpy as np

from loopcool.core.errors import ParameterError
from loopcool.core.params import SystemParams
from loopcool.core.utils import ArrayLike, wrap_phase

logger = logging.getLogger("loopcool.mbf")

BANDWIDTH_RATIO_WARNING = 10.0
PHASE_TOLERANCE = 1e-9

FilterFunction = Callable[[np.ndarray], np.ndarray]


def _require_detector_efficiency(eta_det: float) -> None:
    if not 0.0 < eta_det <= 1.0:
        raise ParameterError(f"eta_det must lie in (0, 1], got {eta_det}")


def _require_resonant(params: SystemParams) -> None:
    if params.detuning != 0.0:
        raise ParameterError("measurement-based feedback is treated on cavity resonance only")


@dataclass(frozen=True)
class GenericFilter:
    """Arbitrary feedback filter Xi_mf(w) plus the detector efficiency"""
    response: FilterFunction
    eta_det: float
    name: str = "custom"

    def __post_init__(self):
        _require_detector_efficiency(self.eta_det)

    def __call__(self, omega: ArrayLike) -> np.ndarray:
        values = np.asarray(self.response(np.asarray(omega, dtype=float)), dtype=complex)
        if not np.all(np.isfinite(values)):
            raise ParameterError(f"filter '{self.name}' is not finite on the evaluation grid")
        return values


@dataclass(frozen=True)
class ColdDampingFilter:
    """Derivative filter with gain ``gain`` and first-order roll-off at ``bandwidth`` (rad/s)"""
    gain: float
    bandwidth: float
    eta_det: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0.0):
            raise ParameterError(f"bandwidth must be > 0, got {self.bandwidth}")
        if not math.isfinite(self.gain):
            raise ParameterError(f"gain must be finite, got {self.gain}")
        _require_detector_efficiency(self.eta_det)

    def response(self, omega: ArrayLike) -> ArrayLike:
        """h_mf(w) = -i g_mf w / (1 - i w / w_mf)"""
        w = np.asarray(omega, dtype=float)
        h = -1j * self.gain * w / (1.0 - 1j * w / self.bandwidth)
        return h if np.ndim(omega) else complex(h)

    def as_generic(self) -> GenericFilter:
        return GenericFilter(response=self.response, eta_det=self.eta_det, name="cold-damping")


class FilterResponse(NamedTuple):
    gamma: ArrayLike
    delta_omega: ArrayLike
    s_mf: ArrayLike


def cold_damping_rates(filt: ColdDampingFilter, params: SystemParams) -> Tuple[float, float]:
    """
    Damping and frequency shift induced by cold damping at omega_m.

    Returns:
        (gamma_mf, delta_omega_mf) in rad/s
    """
    _require_resonant(params)
    om, half = params.omega_m, params.kappa / 2
    g, w_mf = filt.gain, filt.bandwidth
    denominator = (half ** 2 + om ** 2) * (om ** 2 + w_mf ** 2)
    strength = params.g1 * g * w_mf
    gamma = 2.0 * om * strength * (half * w_mf - om ** 2) / denominator
    delta_omega = om ** 2 * strength * (half + w_mf) / denominator
    return gamma, delta_omega


def optimal_gain(eta_det: float, g1: float, omega_m: float) -> float:
    """Gain minimizing the large-bandwidth cold-damping occupation."""
    _require_detector_efficiency(eta_det)
    return 4.0 * math.sqrt(eta_det) * g1 / omega_m


def cold_damping_occupation(filt: ColdDampingFilter, params: SystemParams) -> float:
    """Residual occupation for bandwidth and kappa well above omega_m."""
    _require_resonant(params)
    if filt.gain <= 0.0:
        raise ParameterError(f"cold damping needs a positive gain, got {filt.gain}")
    g1, om = params.g1, params.omega_m
    if g1 <= 0.0:
        raise ParameterError("cold damping needs a nonzero measurement coupling g1")
    ratio = min(filt.bandwidth, params.kappa) / om
    if ratio < BANDWIDTH_RATIO_WARNING:
        logger.warning(
            f"min(bandwidth, kappa) / omega_m = {ratio:.3g}: "
            "the large-bandwidth occupation formula is approximate here"
        )
    return g1 / (filt.gain * om) + filt.gain * om / (16.0 * g1 * filt.eta_det) - 0.5


def generic_filter_response(filt: GenericFilter, params: SystemParams, omega: ArrayLike) -> FilterResponse:
    """
    Damping Gamma_mf(w), shift delta_omega_mf(w) and noise S_mf(w) for any filter.

    The noise collects measurement backaction, fed-back imprecision scaled by
    1/eta_det, and their correlation.
    """
    _require_resonant(params)
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0.0):
        raise ParameterError("Gamma_mf(w) carries omega_m / w and is undefined at w = 0")
    g1, kappa = params.g1, params.kappa
    xi = filt(w)
    u = kappa / 2 - 1j * w
    loop = 2.0 * g1 * xi / u
    delta_omega = 0.5 * loop.real
    gamma = -params.omega_m / w * loop.imag
    s_mf = (
        kappa * g1 ** 2 / (w ** 2 + (kappa / 2) ** 2)
        + np.abs(xi) ** 2 / (4.0 * kappa * filt.eta_det)
        - g1 * (xi / u).imag
    )
    if np.ndim(omega) == 0:
        return FilterResponse(float(gamma), float(delta_omega), float(s_mf))
    return FilterResponse(gamma, delta_omega, s_mf)


def equivalence_filter(params: SystemParams) -> GenericFilter:
    """
    Filter whose measurement-based loop reproduces the coherent loop exactly.

    Valid on resonance at loop phase pi/2; the delay enters as exp(i w tau) and
    the detector efficiency equals the loop efficiency.
    """
    _require_resonant(params)
    if abs(wrap_phase(params.phi - math.pi / 2)) > PHASE_TOLERANCE:
        raise ParameterError(
            f"equivalence filter needs phi = pi/2, got {params.phi:.6g} rad"
        )
    eta = params.eta
    strength = -4.0 * params.g2 * math.sqrt(eta)
    kappa, tau = params.kappa, params.tau

    def response(omega: np.ndarray) -> np.ndarray:
        return strength * np.exp(1j * omega * tau) / (1.0 - 2j * omega / kappa)

    return GenericFilter(response=response, eta_det=eta, name="equivalence")


def filter_phase(filt: ColdDampingFilter, omega: float) -> float:
    """arg h_mf(w) = -arctan(w_mf / w) for a positive gain"""
    return cmath.phase(filt.response(omega))


FILTER_PRESETS = {
    "cold-damping": lambda params, gain, bandwidth, eta_det: ColdDampingFilter(
        gain, bandwidth, eta_det
    ).as_generic(),
    "equivalence": lambda params, gain=None, bandwidth=None, eta_det=None: equivalence_filter(params),
}


def named_filter(name: str, params: SystemParams, **settings) -> GenericFilter:
    """Build one of the preset filters by name."""
    if name not in FILTER_PRESETS:
        raise ParameterError(f"Unknown filter '{name}'. Available: {', '.join(FILTER_PRESETS)}")
    return FILTER_PRESETS[name](params, **settings)

"""
Reduced model of the loop: both cavity modes eliminated, the mechanics sees a
frequency shift, an extra damping rate and a feedback noise force.

Two code paths are kept side by side:
- the exact finite-kappa, finite-detuning expressions (used everywhere by default)
- the unresolved-sideband forms (kappa >> omega_m), kept for limit checks
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Tuple

import numpy as np

from loopcool.core.errors import InstabilityError, NoBackactionCoolingError, ParameterError
from loopcool.core.params import SystemParams, thermal_spectrum
from loopcool.core.spectrum import Spectrum, check_grid
from loopcool.core.utils import ArrayLike

logger = logging.getLogger("loopcool.reduced")

SIDEBAND_IDENTITY_RTOL = 1e-9


@dataclass(frozen=True)
class LoopState:
    """The handful of numbers the reduced model depends on."""
    omega_m: float
    gamma_m: float
    kappa: float
    detuning: float
    g1: float
    g2: float
    eta: float
    phi: float
    tau: float
    n_th: float

    @classmethod
    def from_params(cls, params: SystemParams) -> "LoopState":
        return cls(
            omega_m=params.omega_m,
            gamma_m=params.gamma_m,
            kappa=params.kappa,
            detuning=params.detuning,
            g1=params.g1,
            g2=params.g2,
            eta=params.eta,
            phi=params.phi,
            tau=params.tau,
            n_th=params.n_th,
        )

    def without_feedback(self) -> "LoopState":
        return replace(self, eta=0.0)

    @property
    def g_squared(self) -> float:
        return self.g1 ** 2 + self.g2 ** 2

    @property
    def cross(self) -> float:
        """g1 g2 sqrt(eta): weight of the interference between the two passes"""
        return self.g1 * self.g2 * math.sqrt(self.eta)


@dataclass(frozen=True)
class CoolingResult:
    delta_omega: float
    gamma: float
    a_plus: float
    a_minus: float
    n_bar: float
    c_qu: float
    stable: bool
    margin: float

    @property
    def gamma_total(self) -> float:
        return self.margin

    def as_dict(self) -> dict:
        return {
            "delta_omega": self.delta_omega,
            "gamma": self.gamma,
            "a_plus": self.a_plus,
            "a_minus": self.a_minus,
            "n_bar": self.n_bar,
            "c_qu": self.c_qu,
            "stable": self.stable,
            "margin": self.margin,
        }


class UnresolvedLimits(NamedTuple):
    """Lowest order in omega_m / kappa at finite detuning"""
    delta_omega: float
    gamma: float
    delta_omega_dyn: float
    gamma_dyn: float
    n_bar: float


def _state(params) -> LoopState:
    return params if isinstance(params, LoopState) else LoopState.from_params(params)


def _self_energy(state: LoopState, omega: ArrayLike) -> np.ndarray:
    """
    Complex K(w) with shift Re K and damping (omega_m/w) Im(-2K).

    u = kappa/2 - i w; the first term is two-beam dynamical backaction, the
    second the delayed interference between the passes.
    """
    w = np.asarray(omega, dtype=float)
    u = state.kappa / 2 - 1j * w
    d = state.detuning
    den = d ** 2 + u ** 2
    backaction = 2.0 * d * state.g_squared / den
    interference = (
        2.0 * d * u * math.cos(state.phi) - (d ** 2 - u ** 2) * math.sin(state.phi)
    ) / den ** 2
    feedback = -2.0 * np.exp(1j * w * state.tau) * state.cross * state.kappa * interference
    return backaction + feedback


def _damping_and_shift(state: LoopState, omega: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0.0):
        raise ParameterError("Gamma_m(w) carries omega_m / w and is undefined at w = 0")
    k = _self_energy(state, w)
    delta_omega = k.real
    gamma = state.omega_m / w * (-2.0 * k).imag
    if np.ndim(omega) == 0:
        return float(delta_omega), float(gamma)
    return delta_omega, gamma


def damping_and_shift(params: SystemParams, omega: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Frequency shift delta_omega_m(w) and damping Gamma_m(w) at finite kappa and detuning.

    Args:
        params: System parameters
        omega: Evaluation frequency (rad/s), scalar or array, nonzero

    Returns:
        (delta_omega, gamma), both in rad/s
    """
    return _damping_and_shift(_state(params), omega)


def _feedback_noise(state: LoopState, omega: ArrayLike) -> ArrayLike:
    w = np.asarray(omega, dtype=float)
    d = state.detuning + w
    half = state.kappa / 2
    backaction = state.kappa * state.g_squared / (half ** 2 + d ** 2)
    interference = 2.0 * state.kappa * state.cross * (
        np.exp(-1j * (state.phi + w * state.tau)) / (d - 1j * half) ** 2
    ).real
    values = backaction + interference
    return values if np.ndim(omega) else float(values)


def feedback_noise_spectrum(params: SystemParams, omega: ArrayLike) -> ArrayLike:
    """Feedback noise S_fb(w) in rad/s, including the two-beam backaction part."""
    return _feedback_noise(_state(params), omega)


def _check_sideband_identity(a_plus: float, a_minus: float, gamma: float) -> None:
    scale = max(abs(a_minus) + abs(a_plus), abs(gamma), 1e-300)
    drift = abs((a_minus - a_plus) - gamma) / scale
    if drift > SIDEBAND_IDENTITY_RTOL:
        logger.warning(f"Sideband identity drift {drift:.2e} exceeds {SIDEBAND_IDENTITY_RTOL:g}")


def _sideband_rates(state: LoopState, omega: float) -> Tuple[float, float]:
    return _feedback_noise(state, -omega), _feedback_noise(state, omega)


def sideband_rates(params: SystemParams) -> Tuple[float, float]:
    """Stokes and anti-Stokes rates (A+, A-) = (S_fb(-omega_m), S_fb(omega_m))."""
    state = _state(params)
    a_plus, a_minus = _sideband_rates(state, state.omega_m)
    _check_sideband_identity(a_plus, a_minus, _damping_and_shift(state, state.omega_m)[1])
    return a_plus, a_minus


def quantum_cooperativity(state: LoopState) -> float:
    numerator = 4.0 * state.g1 * state.g2
    if state.n_th == 0.0:
        return math.inf if numerator > 0.0 else 0.0
    return numerator / (state.kappa * state.gamma_m * state.n_th)


def _cooling(state: LoopState, shifted: bool = False) -> CoolingResult:
    delta_omega, gamma = _damping_and_shift(state, state.omega_m)
    omega_eval = state.omega_m
    if shifted:
        omega_eval = state.omega_m + delta_omega
        if omega_eval <= 0.0:
            raise ParameterError("shifted resonance frequency is not positive")
        delta_omega, gamma = _damping_and_shift(state, omega_eval)
    a_plus, a_minus = _sideband_rates(state, omega_eval)
    if not shifted:
        _check_sideband_identity(a_plus, a_minus, gamma)
        gamma = a_minus - a_plus
    margin = state.gamma_m + gamma
    stable = margin > 0.0
    n_bar = (state.gamma_m * state.n_th + a_plus) / margin if stable else math.nan
    return CoolingResult(
        delta_omega=delta_omega,
        gamma=gamma,
        a_plus=a_plus,
        a_minus=a_minus,
        n_bar=n_bar,
        c_qu=quantum_cooperativity(state),
        stable=stable,
        margin=margin,
    )


def phonon_number(params: SystemParams, shifted: bool = False) -> CoolingResult:
    """
    Steady-state occupation n = (gamma_m n_th + A+) / (gamma_m + Gamma_m).

    Rates are taken at the bare frequency unless ``shifted`` is set, in which
    case they are evaluated at omega_m + delta_omega_m. An unstable point
    comes back with ``stable=False`` and ``n_bar`` = NaN.
    """
    return _cooling(_state(params), shifted=shifted)


def cooling_limit(eta: float) -> float:
    """Minimum occupation (1 - sqrt(eta)) / (2 sqrt(eta)) reachable with loop efficiency eta."""
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"cooling limit needs 0 < eta <= 1, got {eta}")
    root = math.sqrt(eta)
    return (1.0 - root) / (2.0 * root)


def asymmetric_optimum(g1: float, g2: float, eta: float) -> float:
    """Occupation at phi = omega_m tau = pi/2 and large cooperativity for unequal couplings."""
    if g1 <= 0.0 or g2 <= 0.0:
        raise ParameterError("both couplings must be > 0")
    if not 0.0 < eta <= 1.0:
        raise ParameterError(f"eta must lie in (0, 1], got {eta}")
    root = math.sqrt(eta)
    return g1 / (4.0 * root * g2) + g2 / (4.0 * root * g1) - 0.5


def quantum_limited_occupation(params) -> float:
    """A+ / Gamma_m: the occupation once gamma_m n_th is negligible (C_qu -> infinity)."""
    state = _state(params)
    a_plus, a_minus = _sideband_rates(state, state.omega_m)
    gamma = a_minus - a_plus
    if gamma <= 0.0:
        return math.inf
    return a_plus / gamma


def dba_baseline(params: SystemParams) -> CoolingResult:
    """
    Dynamical backaction cooling with both beams but no loop (eta = 0).

    With g2 = 0 this is the usual single-beam result.
    """
    state = _state(params)
    if state.detuning == 0.0:
        raise NoBackactionCoolingError("no dynamical backaction cooling at zero detuning")
    return _cooling(state.without_feedback())


def dba_limit(kappa: float, detuning: float, omega_m: float) -> float:
    """Unresolved-sideband dynamical backaction occupation at large cooperativity."""
    if detuning == 0.0:
        raise NoBackactionCoolingError("no dynamical backaction cooling at zero detuning")
    return (detuning ** 2 + (kappa / 2) ** 2) / (4.0 * abs(detuning) * omega_m) - 0.5


def dba_floor(kappa: float, omega_m: float) -> float:
    """kappa / (4 omega_m): best dynamical backaction occupation (reached at detuning -kappa/2)."""
    return kappa / (4.0 * omega_m)


def unresolved_damping_and_shift(params: SystemParams) -> Tuple[float, float]:
    """On-resonance shift and damping at omega_m for kappa >> omega_m."""
    state = _state(params)
    if state.detuning != 0.0:
        raise ParameterError("the resonant unresolved-sideband forms need zero detuning")
    strength = math.sqrt(state.eta) * state.g1 * state.g2 / state.kappa * math.sin(state.phi)
    phase = state.omega_m * state.tau
    return -8.0 * strength * math.cos(phase), 16.0 * strength * math.sin(phase)


def unresolved_feedback_noise(params: SystemParams, omega: ArrayLike) -> ArrayLike:
    """On-resonance S_fb(w) for kappa >> |w|."""
    state = _state(params)
    if state.detuning != 0.0:
        raise ParameterError("the resonant unresolved-sideband forms need zero detuning")
    w = np.asarray(omega, dtype=float)
    values = 8.0 / state.kappa * (
        state.g_squared / 2 - state.cross * np.cos(state.phi + w * state.tau)
    )
    return values if np.ndim(omega) else float(values)


def finite_detuning_limits(params: SystemParams) -> UnresolvedLimits:
    """
    Unresolved-sideband expressions at finite detuning.

    ``gamma`` is the loop contribution only (lowest order in omega_m/kappa),
    ``gamma_dyn`` the first-order backaction term. ``n_bar`` assumes
    Gamma_m >> gamma_m and is NaN where the loop does not cool.
    """
    state = _state(params)
    d, half, om = state.detuning, state.kappa / 2, state.omega_m
    lorentz = d ** 2 + half ** 2
    drive = d * state.kappa * math.cos(state.phi) - (d ** 2 - half ** 2) * math.sin(state.phi)
    quadrature = d * state.kappa * math.sin(state.phi) + (d ** 2 - half ** 2) * math.cos(state.phi)
    loop = state.cross * state.kappa * drive / lorentz ** 2

    delta_omega_dyn = 2.0 * d * state.g_squared / lorentz
    gamma_dyn = -4.0 * d * state.kappa * om * state.g_squared / lorentz ** 2
    delta_omega = delta_omega_dyn - 2.0 * math.cos(om * state.tau) * loop
    gamma = 4.0 * math.sin(om * state.tau) * loop

    n_bar = math.nan
    sin_tau = math.sin(om * state.tau)
    if gamma > 0.0 and drive != 0.0 and sin_tau != 0.0:
        n_bar = (
            state.kappa / gamma * state.g_squared / lorentz
            + 0.5 * math.cos(om * state.tau) / sin_tau * quadrature / drive
            - 0.5
        )
    return UnresolvedLimits(delta_omega, gamma, delta_omega_dyn, gamma_dyn, n_bar)


def lorentzian_spectrum(params: SystemParams, grid: np.ndarray) -> Spectrum:
    """
    Two-Lorentzian displacement spectrum S_XX(w) of the reduced model.

    Peaks sit at +-(omega_m + delta_omega_m) with full width gamma_m + Gamma_m
    and weights S_th(+-omega_m) + S_fb(+-omega_m). Its area over dw/2pi is
    n + 1/2.
    """
    grid = check_grid(grid)
    state = _state(params)
    result = _cooling(state)
    if not result.stable:
        raise InstabilityError(
            f"Lorentzian spectrum needs a stable point (margin {result.margin:.3g} rad/s)",
            margin=result.margin,
        )
    mech = params.mechanics
    center = state.omega_m + result.delta_omega
    half_width = result.margin / 2
    weight_pos = thermal_spectrum(mech, state.omega_m) + result.a_minus
    weight_neg = thermal_spectrum(mech, -state.omega_m) + result.a_plus

    def evaluate(w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return 0.5 * weight_pos / ((center - w) ** 2 + half_width ** 2) + 0.5 * weight_neg / (
            (center + w) ** 2 + half_width ** 2
        )

    return Spectrum(
        omega=grid,
        values=evaluate(grid),
        observable="X_m",
        model="reduced",
        resonance=center,
        linewidth=result.margin,
        evaluator=evaluate,
        metadata={"n_bar": result.n_bar},
    )

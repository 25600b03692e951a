"""
Physical parameter set of the feedback loop and its steady-state mean fields.

All values are stored in SI / angular units (rad/s, W, K, rad). The dataclasses
are frozen, so a SystemParams can be shared between threads and sweep points
derive new sets through ``SystemParams.evolve``.
"""
import cmath
import logging
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Optional

import numpy as np

from loopcool.core.errors import ParameterError
from loopcool.core.utils import HBAR, KB, ArrayLike, bose_occupation, wavelength_to_omega, wrap_phase

logger = logging.getLogger("loopcool.params")

DEFAULT_WAVELENGTH_NM = 780.0
MIN_QUALITY_FACTOR = 10.0


def _require_efficiency(name: str, value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise ParameterError(f"{name} must lie in (0, 1], got {value}")


def _require_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ParameterError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class MechanicalMode:
    """Mechanical oscillator: frequency, energy damping rate, bath temperature"""
    omega_m: float
    gamma_m: float
    temperature: float = 0.0

    def __post_init__(self):
        _require_positive("omega_m", self.omega_m)
        _require_positive("gamma_m", self.gamma_m)
        if not (math.isfinite(self.temperature) and self.temperature >= 0.0):
            raise ParameterError(f"temperature must be >= 0, got {self.temperature}")
        if self.quality_factor < MIN_QUALITY_FACTOR:
            logger.warning(
                f"Q = {self.quality_factor:.3g} < {MIN_QUALITY_FACTOR:g}: "
                "the reduced model assumes gamma_m << omega_m"
            )

    @property
    def quality_factor(self) -> float:
        return self.omega_m / self.gamma_m

    @property
    def n_th(self) -> float:
        return thermal_occupation(self)


@dataclass(frozen=True)
class CavityMode:
    """Parameters shared by both polarization modes of the cavity"""
    kappa: float
    detuning: float = 0.0
    g0: float = 0.0
    omega_L: float = field(default_factory=lambda: wavelength_to_omega(DEFAULT_WAVELENGTH_NM))

    def __post_init__(self):
        _require_positive("kappa", self.kappa)
        _require_positive("omega_L", self.omega_L)
        if not math.isfinite(self.detuning):
            raise ParameterError(f"detuning must be finite, got {self.detuning}")
        if not (math.isfinite(self.g0) and self.g0 >= 0.0):
            raise ParameterError(f"g0 must be >= 0, got {self.g0}")


@dataclass(frozen=True)
class LossBudget:
    eta1: float = 1.0
    eta2: float = 1.0
    eta_t: float = 1.0
    eta_aux: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            _require_efficiency(f.name, getattr(self, f.name))

    @property
    def eta(self) -> float:
        """Total loop efficiency eta1 * eta2 * eta_t * eta_aux"""
        return self.eta1 * self.eta2 * self.eta_t * self.eta_aux


@dataclass(frozen=True)
class DriveConfig:
    """Laser drives as measured in front of the cavity"""
    p1: float = 0.0
    p_aux_measured: float = 0.0
    aux_lock_phase: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.p1) and self.p1 >= 0.0):
            raise ParameterError(f"p1 must be >= 0, got {self.p1}")
        if not (math.isfinite(self.p_aux_measured) and self.p_aux_measured >= 0.0):
            raise ParameterError(f"p_aux_measured must be >= 0, got {self.p_aux_measured}")

    def aux_power(self, losses: LossBudget) -> float:
        """Auxiliary power before the combining beamsplitter."""
        if self.p_aux_measured == 0.0:
            return 0.0
        transmission = (1.0 - losses.eta_aux) * losses.eta_t
        if transmission <= 0.0:
            raise ParameterError(
                "p_aux_measured > 0 needs eta_aux < 1: no auxiliary light reaches the monitor"
            )
        return self.p_aux_measured / transmission


class PhaseMode(Enum):
    """How the loop phase is obtained"""
    DIRECT = "direct"
    DERIVED = "derived"


@dataclass(frozen=True)
class FeedbackLoop:
    phi: float = math.pi / 2
    tau: float = 0.0
    phase_mode: PhaseMode = PhaseMode.DIRECT
    # added to the lock phase before the auxiliary field is built (derived mode only)
    lock_offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0.0):
            raise ParameterError(f"tau must be >= 0, got {self.tau}")
        if not math.isfinite(self.phi):
            raise ParameterError(f"phi must be finite, got {self.phi}")


@dataclass(frozen=True)
class Couplings:
    """Explicit couplings and loop efficiency, bypassing the mean-field calculation"""
    g1: float
    g2: float
    eta: Optional[float] = None

    def __post_init__(self):
        if self.g1 < 0.0 or self.g2 < 0.0:
            raise ParameterError(f"couplings must be >= 0, got g1={self.g1}, g2={self.g2}")
        if self.eta is not None and not 0.0 <= self.eta <= 1.0:
            raise ParameterError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class MeanFields:
    alpha1_in: complex
    alpha_aux: complex
    alpha1: complex
    alpha2: complex
    g1: float
    g2: float
    delta_x: float
    field_phase: float
    phi: float


def thermal_occupation(mech: MechanicalMode) -> float:
    """Bose occupation of the mechanical bath at omega_m (0 at T = 0)."""
    return bose_occupation(mech.omega_m, mech.temperature)


def thermal_spectrum(mech: MechanicalMode, omega: ArrayLike) -> ArrayLike:
    """
    Thermal force spectrum S_th(w) = gamma_m (|w|/omega_m) [n_B(|w|) + step(w)].

    The step function is 1/2 at w = 0, where the spectrum tends to
    gamma_m k_B T / (hbar omega_m).
    """
    w = np.asarray(omega, dtype=float)
    a = np.abs(w)
    step = np.where(w > 0.0, 1.0, np.where(w < 0.0, 0.0, 0.5))
    if mech.temperature > 0.0:
        safe = np.where(a > 0.0, a, 1.0)
        n_b = bose_occupation(safe, mech.temperature)
        kt_over_hbar = KB * mech.temperature / HBAR
        thermal = np.where(a > 0.0, a * n_b, kt_over_hbar)
    else:
        thermal = np.zeros_like(a)
    values = mech.gamma_m * (thermal + a * step) / mech.omega_m
    return values if np.ndim(omega) else float(values)


def mean_fields(params: "SystemParams") -> MeanFields:
    """
    Intracavity mean fields of both passes, couplings and loop phase.

    The first-pass input amplitude is real and positive; every other phase is
    relative to it. The auxiliary oscillator is locked at ``aux_lock_phase``
    (plus ``lock_offset``) with respect to the mean first-pass output field.
    ``field_phase`` is arg(alpha1 / alpha2); the loop phase ``phi`` seen by the
    mechanics is its negative, wrapped onto (-pi, pi].
    """
    cavity, losses, drive = params.cavity, params.losses, params.drive
    kappa, delta = cavity.kappa, cavity.detuning
    eta = losses.eta
    photon_energy = HBAR * cavity.omega_L

    alpha1_prime = math.sqrt(drive.p1 / photon_energy)
    alpha1_in = math.sqrt(losses.eta1) * alpha1_prime
    chi_inv = kappa / 2 - 1j * delta
    alpha1_out = alpha1_in * (-kappa / 2 - 1j * delta) / chi_inv

    p_aux = drive.aux_power(losses)
    lock = drive.aux_lock_phase + params.loop.lock_offset + cmath.phase(alpha1_out)
    alpha_aux_prime = math.sqrt(p_aux / photon_energy) * cmath.exp(1j * lock)

    # sqrt(1 - eta) * alpha_aux; stays finite when eta -> 1
    aux_drive = (
        (1.0 - losses.eta1) * math.sqrt(losses.eta2 * losses.eta_t * losses.eta_aux) * alpha1_prime
        + math.sqrt(losses.eta2 * losses.eta_t * (1.0 - losses.eta_aux)) * alpha_aux_prime
    )
    alpha_aux = aux_drive / math.sqrt(1.0 - eta) if eta < 1.0 else 0j

    alpha1 = -math.sqrt(kappa) * alpha1_in / chi_inv
    alpha2 = (
        math.sqrt(eta * kappa) * (kappa / 2 + 1j * delta) / chi_inv * alpha1_in
        - math.sqrt(kappa) * aux_drive
    ) / chi_inv

    # the feedback enters with the conjugate of the field phase difference
    field_phase = cmath.phase(alpha1 * alpha2.conjugate())
    g0 = cavity.g0
    photons = abs(alpha1) ** 2 + abs(alpha2) ** 2
    return MeanFields(
        alpha1_in=complex(alpha1_in),
        alpha_aux=complex(alpha_aux),
        alpha1=complex(alpha1),
        alpha2=complex(alpha2),
        g1=g0 * abs(alpha1),
        g2=g0 * abs(alpha2),
        delta_x=math.sqrt(2.0) * g0 / params.mechanics.omega_m * photons,
        field_phase=field_phase,
        phi=wrap_phase(-field_phase),
    )


_SECTIONS = ("mechanics", "cavity", "losses", "drive", "loop", "couplings")


@dataclass(frozen=True)
class SystemParams:
    """
    Complete parameter set of the coherent feedback loop.

    With ``couplings`` set (theory mode) g1, g2 and optionally eta are taken
    as given; otherwise they follow from the drives through ``mean_fields``.
    """
    mechanics: MechanicalMode
    cavity: CavityMode
    losses: LossBudget = field(default_factory=LossBudget)
    drive: DriveConfig = field(default_factory=DriveConfig)
    loop: FeedbackLoop = field(default_factory=FeedbackLoop)
    couplings: Optional[Couplings] = None

    def __post_init__(self):
        if self.couplings is not None and self.loop.phase_mode is PhaseMode.DERIVED:
            raise ParameterError("explicit couplings require phase_mode 'direct'")

    @classmethod
    def theory(
        cls,
        omega_m: float,
        gamma_m: float,
        kappa: float,
        g1: float,
        g2: float,
        eta: float,
        phi: float = math.pi / 2,
        tau: float = 0.0,
        detuning: float = 0.0,
        temperature: float = 0.0,
        g0: float = 0.0,
    ) -> "SystemParams":
        """Parameter set with couplings, efficiency and loop phase given directly."""
        return cls(
            mechanics=MechanicalMode(omega_m, gamma_m, temperature),
            cavity=CavityMode(kappa=kappa, detuning=detuning, g0=g0),
            loop=FeedbackLoop(phi=phi, tau=tau, phase_mode=PhaseMode.DIRECT),
            couplings=Couplings(g1=g1, g2=g2, eta=eta),
        )

    @cached_property
    def mean_fields(self) -> MeanFields:
        return mean_fields(self)

    @property
    def g1(self) -> float:
        return self.couplings.g1 if self.couplings else self.mean_fields.g1

    @property
    def g2(self) -> float:
        return self.couplings.g2 if self.couplings else self.mean_fields.g2

    @property
    def eta(self) -> float:
        if self.couplings is not None and self.couplings.eta is not None:
            return self.couplings.eta
        return self.losses.eta

    @property
    def phi(self) -> float:
        if self.loop.phase_mode is PhaseMode.DERIVED:
            return self.mean_fields.phi
        return self.loop.phi

    @property
    def tau(self) -> float:
        return self.loop.tau

    @property
    def omega_m(self) -> float:
        return self.mechanics.omega_m

    @property
    def gamma_m(self) -> float:
        return self.mechanics.gamma_m

    @property
    def kappa(self) -> float:
        return self.cavity.kappa

    @property
    def detuning(self) -> float:
        return self.cavity.detuning

    @property
    def n_th(self) -> float:
        return self.mechanics.n_th

    def evolve(self, **changes) -> "SystemParams":
        """
        Copy with individual fields replaced, e.g. ``evolve(detuning=..., tau=...)``.

        Keys are routed to the section that owns them; coupling keys need a
        parameter set in theory mode.
        """
        updates: Dict[str, Dict] = {}
        for key, value in changes.items():
            for section in _SECTIONS:
                part = getattr(self, section)
                if part is not None and key in {f.name for f in fields(part)}:
                    updates.setdefault(section, {})[key] = value
                    break
            else:
                raise ParameterError(f"Unknown or inapplicable parameter '{key}'")
        return replace(
            self,
            **{section: replace(getattr(self, section), **kw) for section, kw in updates.items()},
        )

    def describe(self) -> Dict[str, float]:
        """Flat record of the resolved parameters (rad/s, W, K, rad)."""
        return {
            "omega_m": self.omega_m,
            "gamma_m": self.gamma_m,
            "temperature": self.mechanics.temperature,
            "n_th": self.n_th,
            "kappa": self.kappa,
            "detuning": self.detuning,
            "g0": self.cavity.g0,
            "omega_L": self.cavity.omega_L,
            "eta": self.eta,
            "p1": self.drive.p1,
            "p_aux_measured": self.drive.p_aux_measured,
            "aux_lock_phase": self.drive.aux_lock_phase,
            "phase_mode": self.loop.phase_mode.value,
            "phi": self.phi,
            "tau": self.tau,
            "g1": self.g1,
            "g2": self.g2,
        }

"""
Exact frequency-domain solution of the linearized loop.

State vector r = (X_m, P_m, x1, p1, x2, p2), inputs
r_in = (xi_th, x1_in, p1_in, x_aux, p_aux). The equations of motion
dr/dt = A r + B r_in become r(w) = C(w) r_in(w) with
C(w) = -[A(w) + i w I]^-1 B(w). Only the delay factor exp(i w tau) makes A and B
frequency dependent.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from loopcool.core.errors import NumericalError, ParameterError, SingularResponseError
from loopcool.core.params import MechanicalMode, SystemParams, thermal_spectrum
from loopcool.core.reduced import CoolingResult, LoopState, phonon_number, quantum_cooperativity
from loopcool.core.spectrum import Spectrum, check_grid
from loopcool.core.utils import ArrayLike

logger = logging.getLogger("loopcool.fullmodel")

CONDITION_LIMIT = 1e12
HERMITICITY_RTOL = 1e-10
CHUNK_SIZE = 512

OBSERVABLES = {"X_m": 0, "P_m": 1, "x1": 2, "p1": 3, "x2": 4, "p2": 5}
SYMMETRIZED_X = "X_m_sym"


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    omega: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


class SelfEnergy(NamedTuple):
    delta_omega: ArrayLike
    gamma: ArrayLike
    s_fb: ArrayLike


def _drift_and_input(state: LoopState, omegas: np.ndarray):
    n = omegas.size
    om, gm, half, d = state.omega_m, state.gamma_m, state.kappa / 2, state.detuning
    delay = np.exp(1j * omegas * state.tau)
    cos_phi, sin_phi = math.cos(state.phi), math.sin(state.phi)
    loop = math.sqrt(state.eta) * state.kappa * delay
    port = math.sqrt(state.eta * state.kappa) * delay
    aux = math.sqrt((1.0 - state.eta) * state.kappa)

    a = np.zeros((n, 6, 6), dtype=complex)
    a[:, 0, 1] = om
    a[:, 1, 0] = -om
    a[:, 1, 1] = -gm
    a[:, 1, 2] = -2.0 * state.g1
    a[:, 1, 4] = -2.0 * state.g2
    a[:, 2, 2] = -half
    a[:, 2, 3] = -d
    a[:, 3, 0] = -2.0 * state.g1
    a[:, 3, 2] = d
    a[:, 3, 3] = -half
    a[:, 4, 2] = -loop * cos_phi
    a[:, 4, 3] = loop * sin_phi
    a[:, 4, 4] = -half
    a[:, 4, 5] = -d
    a[:, 5, 0] = -2.0 * state.g2
    a[:, 5, 2] = -loop * sin_phi
    a[:, 5, 3] = -loop * cos_phi
    a[:, 5, 4] = d
    a[:, 5, 5] = -half

    b = np.zeros((n, 6, 5), dtype=complex)
    b[:, 1, 0] = -math.sqrt(2.0)
    b[:, 2, 1] = -math.sqrt(state.kappa)
    b[:, 3, 2] = -math.sqrt(state.kappa)
    b[:, 4, 1] = -port * cos_phi
    b[:, 4, 2] = port * sin_phi
    b[:, 4, 3] = -aux
    b[:, 5, 1] = -port * sin_phi
    b[:, 5, 2] = -port * cos_phi
    b[:, 5, 4] = -aux
    return a, b


def _solve(state: LoopState, omegas: np.ndarray) -> np.ndarray:
    """Stacked C(w) for every w, shape (n, 6, 5)."""
    a, b = _drift_and_input(state, omegas)
    m = a + 1j * omegas[:, None, None] * np.eye(6)
    with np.errstate(all="ignore"):
        condition = np.linalg.cond(m)
    bad = ~np.isfinite(condition) | (condition > CONDITION_LIMIT)
    if np.any(bad):
        i = int(np.argmax(bad))
        logger.error(f"Singular response matrix at omega={omegas[i]:.6g} rad/s")
        raise SingularResponseError(float(omegas[i]), float(condition[i]))
    return -np.linalg.solve(m, b)


def assemble(params: SystemParams, omega: float) -> FrequencyResponse:
    """A(w), B(w) and the response C(w) at a single frequency."""
    state = LoopState.from_params(params)
    w = np.array([float(omega)])
    a, b = _drift_and_input(state, w)
    c = _solve(state, w)
    return FrequencyResponse(omega=float(omega), A=a[0], B=b[0], C=c[0])


def input_spectral_matrix(mech: MechanicalMode, omega: ArrayLike) -> np.ndarray:
    """
    Input noise densities: thermal force in slot 0, vacuum blocks for both optical ports.

    Returns an array of shape (5, 5) for scalar omega, (n, 5, 5) otherwise.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    s = np.zeros((w.size, 5, 5), dtype=complex)
    s[:, 0, 0] = thermal_spectrum(mech, w)
    for k in (1, 3):
        s[:, k, k] = 0.5
        s[:, k, k + 1] = 0.5j
        s[:, k + 1, k] = -0.5j
        s[:, k + 1, k + 1] = 0.5
    return s[0] if np.ndim(omega) == 0 else s


def _diagonal_density(params: SystemParams, index: int, omegas: np.ndarray) -> np.ndarray:
    state = LoopState.from_params(params)
    row_pos = _solve(state, omegas)[:, index, :]
    row_neg = _solve(state, -omegas)[:, index, :]
    s_in = input_spectral_matrix(params.mechanics, omegas)
    values = np.einsum("ni,nij,nj->n", row_pos, s_in, row_neg)
    scale = np.abs(values.real) + np.einsum(
        "ni,nii->n", np.abs(row_pos) ** 2, np.abs(s_in)
    )
    residue = np.abs(values.imag) > HERMITICITY_RTOL * scale
    if np.any(residue):
        i = int(np.argmax(residue))
        raise NumericalError(
            f"spectral density not real at omega={omegas[i]:.6g} rad/s "
            f"(imag {values.imag[i]:.3g}, real {values.real[i]:.3g})"
        )
    return values.real


def _evaluate(params: SystemParams, observable: str, omegas: np.ndarray, workers: int = 1) -> np.ndarray:
    if observable == SYMMETRIZED_X:
        return 0.5 * (
            _evaluate(params, "X_m", omegas, workers)
            + _evaluate(params, "X_m", -omegas, workers)
        )
    index = OBSERVABLES[observable]
    chunks = [omegas[i:i + CHUNK_SIZE] for i in range(0, omegas.size, CHUNK_SIZE)]
    if workers <= 1 or len(chunks) == 1:
        parts = [_diagonal_density(params, index, chunk) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(lambda c: _diagonal_density(params, index, c), chunks))
    return np.concatenate(parts)


def observable_spectrum(
    params: SystemParams, observable: str, grid: np.ndarray, workers: int = 1
) -> Spectrum:
    """
    Spectral density of one state variable on a frequency grid.

    Args:
        params: System parameters
        observable: One of X_m, P_m, x1, p1, x2, p2 or X_m_sym (symmetrized X_m)
        grid: Strictly increasing angular frequencies (rad/s)
        workers: Thread count for chunked evaluation

    Returns:
        Spectrum with an evaluator for refinement and, when the reduced
        model finds the point stable, the resonance position and width

    Raises:
        SingularResponseError: With the offending frequency attached
    """
    if observable not in OBSERVABLES and observable != SYMMETRIZED_X:
        raise ParameterError(
            f"Unknown observable '{observable}'. Available: "
            f"{', '.join(list(OBSERVABLES) + [SYMMETRIZED_X])}"
        )
    grid = check_grid(grid)
    values = _evaluate(params, observable, grid, workers)

    resonance: Optional[float] = None
    linewidth: Optional[float] = None
    estimate = phonon_number(params)
    if estimate.stable:
        resonance = params.omega_m + estimate.delta_omega
        linewidth = estimate.margin

    return Spectrum(
        omega=grid,
        values=values,
        observable=observable,
        model="full",
        symmetrized=observable == SYMMETRIZED_X,
        resonance=resonance,
        linewidth=linewidth,
        evaluator=lambda w: _evaluate(params, observable, np.asarray(w, dtype=float)),
    )


def extract_self_energy(params: SystemParams, omega: ArrayLike) -> SelfEnergy:
    """
    Shift, damping and feedback noise read off the exact response.

    The mechanical susceptibility C_X,xi = -sqrt(2) omega_m / D(w) gives
    D - (omega_m^2 - w^2 - i w gamma_m) = 2 omega_m delta_omega - i w Gamma, and the
    noise referred to the thermal port is S_XX |D|^2 / (2 omega_m^2) = S_th + S_fb.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(w == 0.0):
        raise ParameterError("self-energy extraction needs omega != 0")
    om, gm = params.omega_m, params.gamma_m
    c = _solve(LoopState.from_params(params), w)
    d_full = -math.sqrt(2.0) * om / c[:, 0, 0]
    sigma = d_full - (om ** 2 - w ** 2 - 1j * w * gm)
    delta_omega = sigma.real / (2.0 * om)
    gamma = -sigma.imag / w
    s_xx = _diagonal_density(params, OBSERVABLES["X_m"], w)
    s_fb = s_xx * np.abs(d_full) ** 2 / (2.0 * om ** 2) - thermal_spectrum(params.mechanics, w)
    if np.ndim(omega) == 0:
        return SelfEnergy(float(delta_omega[0]), float(gamma[0]), float(s_fb[0]))
    return SelfEnergy(delta_omega, gamma, s_fb)


def full_cooling(params: SystemParams) -> CoolingResult:
    """
    Cooling figures taken from the exact response instead of the reduced formulas.

    Gamma_m is the extracted damping at omega_m; the sideband rates are the
    extracted feedback noise at -+omega_m.
    """
    om = params.omega_m
    extracted = extract_self_energy(params, np.array([om, -om]))
    delta_omega = float(extracted.delta_omega[0])
    gamma = float(extracted.gamma[0])
    a_minus, a_plus = float(extracted.s_fb[0]), float(extracted.s_fb[1])
    state = LoopState.from_params(params)
    margin = params.gamma_m + gamma
    stable = margin > 0.0
    return CoolingResult(
        delta_omega=delta_omega,
        gamma=gamma,
        a_plus=a_plus,
        a_minus=a_minus,
        n_bar=(params.gamma_m * params.n_th + a_plus) / margin if stable else math.nan,
        c_qu=quantum_cooperativity(state),
        stable=stable,
        margin=margin,
    )

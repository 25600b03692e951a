"""
Numerical services on top of the two models: phonon-number integration,
stability checks, parameter sweeps, total-power bookkeeping, feedback
parameter optimization and the cavity-regime comparison.
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.optimize import bisect, minimize

from loopcool.core.errors import (
    ConvergenceError,
    LoopcoolError,
    NoBackactionCoolingError,
    NoStableRegionError,
    ParameterError,
)
from loopcool.core.fullmodel import full_cooling
from loopcool.core.params import MechanicalMode, PhaseMode, SystemParams
from loopcool.core.reduced import (
    CoolingResult,
    LoopState,
    _damping_and_shift,
    dba_baseline,
    phonon_number,
    quantum_limited_occupation,
)
from loopcool.core.spectrum import Spectrum
from loopcool.core.utils import hz_to_rad

logger = logging.getLogger("loopcool.engine")

WINDOW_LINEWIDTHS = 50.0
QUAD_LIMIT = 500
SAMPLED_RESOLUTION = 10
BOUNDARY_XTOL = 1e-6
OPTIMIZER_MARGIN = 1e-3
MODELS = ("reduced", "full")


# -- phonon integration ------------------------------------------------------


class PhononIntegral(NamedTuple):
    n_bar: float
    n_bar_high_q: float
    relative_difference: float
    error: float
    error_high_q: float


def _quad(func: Callable[[float], float], lo: float, hi: float, rtol: float, epsabs: float, points=None):
    result = quad(
        func, lo, hi, points=points, limit=QUAD_LIMIT, epsabs=epsabs, epsrel=rtol, full_output=1
    )
    if len(result) > 3:
        logger.error(f"Adaptive integration over [{lo:.6g}, {hi:.6g}] failed: {result[3]}")
        raise ConvergenceError(f"adaptive integration did not converge: {result[3]}")
    return result[0], result[1]


def _lorentzian_tail(func: Callable[[float], float], peak: float, edge: float, half: float):
    """
    Area beyond ``edge`` (away from ``peak``) of a Lorentzian of half-width ``half``.

    The amplitude is matched to ``func`` at the edge; matching it once more at
    twice the distance gives the error.
    """
    distance = abs(edge - peak)
    direction = 1.0 if edge > peak else -1.0
    shape = (0.5 * math.pi - math.atan(distance / half)) / half

    def amplitude(w: float) -> float:
        return func(w) * ((w - peak) ** 2 + half ** 2)

    near = amplitude(edge) * shape
    far = amplitude(edge + direction * distance) * shape
    return near, abs(far - near)


def _windows(center: float, half_width: float) -> List[Tuple[float, float, List[float]]]:
    if center - half_width <= -center + half_width:
        return [(-center - half_width, center + half_width, [-center, center])]
    return [
        (-center - half_width, -center + half_width, [-center]),
        (center - half_width, center + half_width, [center]),
    ]


def _windowed(func: Callable[[float], float], windows, rtol: float) -> Tuple[float, float, float]:
    """Peak windows plus the gap between them: (total, error, peak area)."""
    peak_area, error = 0.0, 0.0
    for lo, hi, points in windows:
        value, err = _quad(func, lo, hi, rtol, 0.0, points=points)
        peak_area += value
        error += err
    total = peak_area
    if len(windows) == 2:
        value, err = _quad(func, windows[0][1], windows[1][0], rtol, rtol * abs(peak_area))
        total += value
        error += err
    return total, error, peak_area


def _integrate_adaptive(spectrum: Spectrum, mech: MechanicalMode, rtol: float) -> Tuple[float, float, float, float]:
    evaluate = spectrum.evaluator
    center, width = abs(spectrum.resonance), spectrum.linewidth
    om = mech.omega_m

    def weighted(w: float) -> float:
        return float(evaluate(np.array([w]))[0]) * (1.0 + (w / om) ** 2) / (2.0 * math.pi)

    def plain(w: float) -> float:
        return 2.0 * float(evaluate(np.array([w]))[0]) / (2.0 * math.pi)

    windows = _windows(center, WINDOW_LINEWIDTHS * width)
    lower, upper = windows[0][0], windows[-1][1]

    plain_total, plain_err, peak_area = _windowed(plain, windows, rtol)
    for lo, hi in ((upper, math.inf), (-math.inf, lower)):
        value, err = _quad(plain, lo, hi, rtol, rtol * abs(peak_area))
        plain_total += value
        plain_err += err

    # the zero-point part of the ohmic bath makes the weighted integrand fall
    # off only as 1/w, so its tails follow the resonance line shape instead
    weighted_total, weighted_err, _ = _windowed(weighted, windows, rtol)
    for peak, edge in ((center, upper), (-center, lower)):
        value, err = _lorentzian_tail(weighted, peak, edge, width / 2)
        weighted_total += value
        weighted_err += err
    return weighted_total, plain_total, weighted_err, plain_err


def _integrate_sampled(spectrum: Spectrum, mech: MechanicalMode) -> Tuple[float, float, float, float]:
    w = spectrum.omega
    values = np.asarray(spectrum.values, dtype=float)
    peak = int(np.argmax(values))
    if peak in (0, w.size - 1):
        raise ConvergenceError("the sampled spectrum peaks at the grid edge; the resonance is not covered")
    if spectrum.linewidth is not None:
        spacing = float(np.max(np.diff(w)))
        if spacing > spectrum.linewidth / SAMPLED_RESOLUTION:
            raise ConvergenceError(
                f"grid spacing {spacing:.3g} rad/s does not resolve the linewidth "
                f"{spectrum.linewidth:.3g} rad/s"
            )
    weighted = values * (1.0 + (w / mech.omega_m) ** 2)
    weighted_total = trapezoid(weighted, w) / (2.0 * math.pi)
    plain_total = 2.0 * trapezoid(values, w) / (2.0 * math.pi)
    coarse = trapezoid(weighted[::2], w[::2]) / (2.0 * math.pi)
    coarse_plain = 2.0 * trapezoid(values[::2], w[::2]) / (2.0 * math.pi)
    if spectrum.symmetrized and w[0] >= 0.0:
        weighted_total, plain_total = 2 * weighted_total, 2 * plain_total
        coarse, coarse_plain = 2 * coarse, 2 * coarse_plain
    return weighted_total, plain_total, abs(weighted_total - coarse), abs(plain_total - coarse_plain)


def integrate_phonons(spectrum: Spectrum, mech: MechanicalMode, rtol: float = 1e-6) -> PhononIntegral:
    """
    Phonon number from 2n + 1 = int S_XX(w) [1 + (w/omega_m)^2] dw/2pi.

    With an evaluator the integral runs adaptively over windows of
    +-50 linewidths around +-(omega_m + delta_omega_m) and the gap between
    them. The high-Q value 2 int S_XX dw/2pi continues out to +-infinity; the
    weighted integral closes with Lorentzian tails in arctan form. Without an
    evaluator the stored samples are integrated with the trapezoid rule. Both
    values come with their own error estimate.

    Raises:
        ConvergenceError: Grid misses the resonance or refinement ran out of budget
    """
    if not 0.0 < rtol < 1.0:
        raise ParameterError(f"rtol must lie in (0, 1), got {rtol}")
    w = spectrum.omega
    if spectrum.evaluator is not None and spectrum.resonance is not None and spectrum.linewidth:
        center = abs(spectrum.resonance)
        if not (w[0] <= center <= w[-1] or w[0] <= -center <= w[-1]):
            raise ConvergenceError(
                f"grid [{w[0]:.6g}, {w[-1]:.6g}] rad/s does not cover the resonance at {center:.6g} rad/s"
            )
        weighted, plain, error, error_high_q = _integrate_adaptive(spectrum, mech, rtol)
    else:
        weighted, plain, error, error_high_q = _integrate_sampled(spectrum, mech)

    n_bar = (weighted - 1.0) / 2.0
    n_bar_high_q = (plain - 1.0) / 2.0
    scale = max(abs(n_bar), abs(n_bar_high_q), 1e-300)
    return PhononIntegral(
        n_bar=n_bar,
        n_bar_high_q=n_bar_high_q,
        relative_difference=abs(n_bar - n_bar_high_q) / scale,
        error=error / 2.0,
        error_high_q=error_high_q / 2.0,
    )


# -- stability ---------------------------------------------------------------


class StabilityReport(NamedTuple):
    stable: bool
    margin: float
    shifted_margin: float

    @property
    def shifted_stable(self) -> bool:
        return self.shifted_margin > 0.0


def stability_check(params: SystemParams) -> StabilityReport:
    """
    Reduced-model stability: margin = gamma_m + Gamma_m(omega_m) must be positive.

    The effective linewidth is also evaluated at the shifted frequency
    omega_m + delta_omega_m; a negative value there is logged.
    """
    state = LoopState.from_params(params)
    delta_omega, gamma = _damping_and_shift(state, state.omega_m)
    margin = state.gamma_m + gamma
    shifted = state.omega_m + delta_omega
    shifted_margin = state.gamma_m + _damping_and_shift(state, shifted)[1] if shifted > 0.0 else -math.inf
    if margin > 0.0 >= shifted_margin:
        logger.warning(
            f"Linewidth at the shifted frequency is negative ({shifted_margin:.3g} rad/s) "
            "although the bare-frequency margin is positive"
        )
    return StabilityReport(margin > 0.0, margin, shifted_margin)


def stability_boundary(
    params: SystemParams, axis: str, lo: float, hi: float, xtol: float = BOUNDARY_XTOL
) -> float:
    """Axis value (axis units) where the stability margin changes sign between lo and hi."""
    setter = get_axis(axis).apply

    def margin(value: float) -> float:
        return stability_check(setter(params, value)).margin

    m_lo, m_hi = margin(lo), margin(hi)
    if m_lo * m_hi > 0.0:
        raise ParameterError(
            f"stability margin does not change sign on {axis} in [{lo}, {hi}] "
            f"({m_lo:.3g}, {m_hi:.3g} rad/s)"
        )
    return bisect(margin, lo, hi, xtol=xtol)


# -- power bookkeeping -------------------------------------------------------


def total_power(params: SystemParams) -> float:
    """P = P1 (1 + eta_T eta_aux) + P_aux + 2 sqrt(eta_aux eta2 P1 P_aux) cos(lock phase), in W."""
    drive, losses = params.drive, params.losses
    return (
        drive.p1 * (1.0 + losses.eta_t * losses.eta_aux)
        + drive.p_aux_measured
        + 2.0
        * math.sqrt(losses.eta_aux * losses.eta2 * drive.p1 * drive.p_aux_measured)
        * math.cos(drive.aux_lock_phase)
    )


def powers_for_total(params: SystemParams, power: float) -> Tuple[float, float]:
    """(P1, P_aux) reaching ``power`` with the baseline ratio P_aux / P1 held fixed."""
    drive, losses = params.drive, params.losses
    if drive.p1 <= 0.0:
        raise ParameterError("total-power scaling needs a baseline with P1 > 0")
    ratio = drive.p_aux_measured / drive.p1
    per_watt = (
        1.0
        + losses.eta_t * losses.eta_aux
        + ratio
        + 2.0 * math.sqrt(losses.eta_aux * losses.eta2 * ratio) * math.cos(drive.aux_lock_phase)
    )
    if per_watt <= 0.0:
        raise ParameterError("total power vanishes at this lock phase; cannot scale")
    p1 = power / per_watt
    return p1, ratio * p1


# -- sweep axes --------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    name: str
    unit: str
    apply: Callable[[SystemParams, float], SystemParams]
    theory_only: bool = False


def _derived_only(params: SystemParams, name: str) -> None:
    if params.couplings is not None:
        raise ParameterError(f"axis '{name}' acts on the drives and needs couplings from mean fields")


def _theory_only(params: SystemParams, name: str) -> None:
    if params.couplings is None:
        raise ParameterError(f"axis '{name}' needs explicit couplings (theory mode)")


def _set_lock_phase(params: SystemParams, value: float) -> SystemParams:
    _derived_only(params, "lock_phase_deg")
    return params.evolve(aux_lock_phase=math.radians(value), phase_mode=PhaseMode.DERIVED)


def _set_loop_phase(params: SystemParams, value: float) -> SystemParams:
    return params.evolve(phi=math.radians(value), phase_mode=PhaseMode.DIRECT)


def _set_p1(params: SystemParams, value: float) -> SystemParams:
    _derived_only(params, "p1_w")
    return params.evolve(p1=value)


def _set_p_aux(params: SystemParams, value: float) -> SystemParams:
    _derived_only(params, "p_aux_measured_w")
    return params.evolve(p_aux_measured=value)


def _set_total_power(params: SystemParams, value: float) -> SystemParams:
    _derived_only(params, "total_power_w")
    p1, p_aux = powers_for_total(params, value)
    return params.evolve(p1=p1, p_aux_measured=p_aux)


def _set_g1(params: SystemParams, value: float) -> SystemParams:
    _theory_only(params, "g1_hz")
    return params.evolve(g1=hz_to_rad(value))


def _set_g2(params: SystemParams, value: float) -> SystemParams:
    _theory_only(params, "g2_hz")
    return params.evolve(g2=hz_to_rad(value))


def _set_g2_ratio(params: SystemParams, value: float) -> SystemParams:
    _theory_only(params, "g2_over_g1")
    return params.evolve(g2=value * params.couplings.g1)


AXES: Dict[str, Axis] = {
    axis.name: axis
    for axis in (
        Axis("detuning_over_kappa", "1", lambda p, v: p.evolve(detuning=v * p.kappa)),
        Axis("lock_phase_deg", "deg", _set_lock_phase),
        Axis("loop_phase_deg", "deg", _set_loop_phase),
        Axis("omega_m_tau_over_pi", "1", lambda p, v: p.evolve(tau=v * math.pi / p.omega_m)),
        Axis("tau_s", "s", lambda p, v: p.evolve(tau=v)),
        Axis("p1_w", "W", _set_p1),
        Axis("p_aux_measured_w", "W", _set_p_aux),
        Axis("total_power_w", "W", _set_total_power),
        Axis("kappa_over_omega_m", "1", lambda p, v: p.evolve(kappa=v * p.omega_m)),
        Axis("temperature_k", "K", lambda p, v: p.evolve(temperature=v)),
        Axis("g1_hz", "Hz", _set_g1, theory_only=True),
        Axis("g2_hz", "Hz", _set_g2, theory_only=True),
        Axis("g2_over_g1", "1", _set_g2_ratio, theory_only=True),
    )
}


def get_axis(name: str) -> Axis:
    if name not in AXES:
        raise ParameterError(f"Unknown sweep axis '{name}'. Available: {', '.join(AXES)}")
    return AXES[name]


# -- sweeps ------------------------------------------------------------------


def evaluate_point(params: SystemParams, model: str = "reduced") -> CoolingResult:
    if model == "reduced":
        return phonon_number(params)
    if model == "full":
        return full_cooling(params)
    raise ParameterError(f"Unknown model '{model}'. Available: {', '.join(MODELS)}")


@dataclass(frozen=True)
class SweepSpec:
    """
    One-dimensional scan of ``axis`` from ``start`` to ``stop``.

    With ``family_axis`` set, the scan is repeated for every entry of
    ``family_values`` (one block per value).
    """
    axis: str
    start: float
    stop: float
    points: int
    baseline: SystemParams
    model: str = "reduced"
    family_axis: Optional[str] = None
    family_values: Tuple[float, ...] = ()

    def __post_init__(self):
        get_axis(self.axis)
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ParameterError("sweep range must be finite")
        if self.points < 2:
            raise ParameterError(f"sweep needs at least 2 points, got {self.points}")
        if self.model not in MODELS:
            raise ParameterError(f"Unknown model '{self.model}'. Available: {', '.join(MODELS)}")
        if self.family_axis is not None:
            get_axis(self.family_axis)
            if not self.family_values:
                raise ParameterError("family_axis given without family_values")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)

    def grid(self) -> List[Tuple[Optional[float], float]]:
        families = self.family_values if self.family_axis else (None,)
        return [(family, float(value)) for family in families for value in self.values]


@dataclass(frozen=True)
class SweepRow:
    family: Optional[float]
    value: float
    result: Optional[CoolingResult] = None
    gamma_dyn: float = math.nan
    delta_omega_dyn: float = math.nan
    total_power: float = math.nan
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _sweep_point(spec: SweepSpec, family: Optional[float], value: float) -> SweepRow:
    try:
        params = spec.baseline
        if spec.family_axis is not None:
            params = get_axis(spec.family_axis).apply(params, family)
        params = get_axis(spec.axis).apply(params, value)
        result = evaluate_point(params, spec.model)
        try:
            baseline = dba_baseline(params)
            gamma_dyn, delta_omega_dyn = baseline.gamma, baseline.delta_omega
        except NoBackactionCoolingError:
            gamma_dyn, delta_omega_dyn = 0.0, 0.0
        power = total_power(params) if params.couplings is None else math.nan
        return SweepRow(family, value, result, gamma_dyn, delta_omega_dyn, power)
    except LoopcoolError as e:
        logger.debug(f"Sweep point {spec.axis}={value:g} failed: {e}")
        return SweepRow(family, value, error=f"{type(e).__name__}: {e}")


def sweep(
    spec: SweepSpec,
    workers: int = 1,
    on_point: Optional[Callable[[SweepRow], None]] = None,
) -> List[SweepRow]:
    """
    Evaluate the chosen model along the sweep.

    Failing points are recorded with their error and the sweep carries on.
    Rows come back in grid order for any worker count.
    """
    grid = spec.grid()

    def run(item: Tuple[Optional[float], float]) -> SweepRow:
        row = _sweep_point(spec, *item)
        if on_point is not None:
            on_point(row)
        return row

    if workers <= 1:
        rows = [run(item) for item in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(run, grid))

    failed = sum(not row.ok for row in rows)
    if failed:
        logger.warning(f"{failed} of {len(rows)} sweep points failed")
    return rows


# -- optimization ------------------------------------------------------------


@dataclass(frozen=True)
class OptimizationProblem:
    """
    Minimize the reduced-model occupation over ``free`` axes within bounds.

    Bounds are in axis units (see ``AXES``). Points whose margin does not
    exceed ``margin_fraction`` * gamma_m count as infeasible.
    """
    baseline: SystemParams
    free: Dict[str, Tuple[float, float]]
    grid_points: int = 11
    tolerance: float = 1e-8
    margin_fraction: float = OPTIMIZER_MARGIN
    max_iterations: int = 4000

    def __post_init__(self):
        if not self.free:
            raise ParameterError("optimization needs at least one free variable")
        for name, (lo, hi) in self.free.items():
            get_axis(name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ParameterError(f"bounds for '{name}' must be finite and ordered, got [{lo}, {hi}]")
        if self.grid_points < 2:
            raise ParameterError(f"grid_points must be >= 2, got {self.grid_points}")

    @property
    def names(self) -> List[str]:
        return list(self.free)

    def params_at(self, unit_point: Sequence[float]) -> SystemParams:
        params = self.baseline
        for name, u in zip(self.names, unit_point):
            lo, hi = self.free[name]
            params = get_axis(name).apply(params, lo + float(u) * (hi - lo))
        return params

    def values_at(self, unit_point: Sequence[float]) -> Dict[str, float]:
        return {
            name: lo + float(u) * (hi - lo)
            for (name, (lo, hi)), u in zip(self.free.items(), unit_point)
        }


@dataclass(frozen=True)
class OptimizationResult:
    params: SystemParams
    result: CoolingResult
    values: Dict[str, float]
    converged: bool
    grid_best: float
    evaluations: int
    message: str = ""
    history: List[float] = field(default_factory=list, repr=False)

    @property
    def margin(self) -> float:
        return self.result.margin


def _objective(problem: OptimizationProblem, unit_point: np.ndarray) -> float:
    try:
        result = phonon_number(problem.params_at(np.clip(unit_point, 0.0, 1.0)))
    except LoopcoolError:
        return math.inf
    if not result.margin > problem.margin_fraction * problem.baseline.gamma_m:
        return math.inf
    if not math.isfinite(result.n_bar):
        return math.inf
    return result.n_bar


def _initial_simplex(start: np.ndarray, step: float) -> np.ndarray:
    simplex = [start]
    for i in range(start.size):
        vertex = start.copy()
        vertex[i] = vertex[i] + step if vertex[i] + step <= 1.0 else vertex[i] - step
        simplex.append(vertex)
    return np.array(simplex)


def optimize(problem: OptimizationProblem, workers: int = 1) -> OptimizationResult:
    """
    Coarse grid scan followed by Nelder-Mead refinement from the best grid point.

    Both stages work in unit-cube coordinates of the free variables. The
    returned point is never worse than the best grid point.

    Raises:
        NoStableRegionError: No grid point is stable with the required margin
    """
    dims = len(problem.free)
    axis = np.linspace(0.0, 1.0, problem.grid_points)
    grid = [np.array(point) for point in itertools.product(axis, repeat=dims)]
    if workers <= 1:
        scores = [_objective(problem, point) for point in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            scores = list(executor.map(lambda p: _objective(problem, p), grid))

    best = int(np.argmin(scores))
    grid_best = scores[best]
    if not math.isfinite(grid_best):
        logger.error(f"No stable point on the {problem.grid_points}^{dims} grid")
        raise NoStableRegionError(
            f"no stable region found within the bounds of {', '.join(problem.names)}"
        )
    logger.debug(f"Grid scan best n = {grid_best:.6g} at {problem.values_at(grid[best])}")

    history: List[float] = []

    def objective(u: np.ndarray) -> float:
        value = _objective(problem, u)
        history.append(value)
        return value

    refined = minimize(
        objective,
        grid[best],
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * dims,
        options={
            "xatol": problem.tolerance,
            "fatol": problem.tolerance,
            "maxiter": problem.max_iterations,
            "maxfev": 2 * problem.max_iterations,
            "initial_simplex": _initial_simplex(grid[best], 0.5 / (problem.grid_points - 1)),
        },
    )

    point = np.clip(refined.x, 0.0, 1.0) if refined.fun <= grid_best else grid[best]
    params = problem.params_at(point)
    result = phonon_number(params)
    if not refined.success:
        logger.warning(f"Simplex refinement stopped early: {refined.message}")
    return OptimizationResult(
        params=params,
        result=result,
        values=problem.values_at(point),
        converged=bool(refined.success),
        grid_best=grid_best,
        evaluations=len(grid) + len(history),
        message=str(refined.message),
        history=history,
    )


# -- cavity regimes ----------------------------------------------------------


class RegimeRow(NamedTuple):
    kappa_over_omega_m: float
    feedback_resonant: float
    feedback_sideband: float
    cavity_sideband: float
    cavity_optimal: float


def regime_comparison(eta_cf: float, kappa_ratios: Sequence[float]) -> List[RegimeRow]:
    """
    Quantum-limited occupation A+ / Gamma_m versus kappa / omega_m.

    Coherent feedback at phi = omega_m tau = pi/2 on resonance and at
    detuning -omega_m; cavity cooling (no loop) at -omega_m and -kappa/2.
    Couplings drop out of the ratio, so equal unit couplings are used.
    """
    if not 0.0 < eta_cf <= 1.0:
        raise ParameterError(f"eta_cf must lie in (0, 1], got {eta_cf}")
    rows = []
    for ratio in kappa_ratios:
        if not ratio > 0.0:
            raise ParameterError(f"kappa / omega_m must be > 0, got {ratio}")
        state = LoopState(
            omega_m=1.0, gamma_m=0.0, kappa=float(ratio), detuning=0.0,
            g1=1.0, g2=1.0, eta=eta_cf, phi=math.pi / 2, tau=math.pi / 2, n_th=0.0,
        )
        cavity = state.without_feedback()
        rows.append(
            RegimeRow(
                kappa_over_omega_m=float(ratio),
                feedback_resonant=quantum_limited_occupation(state),
                feedback_sideband=quantum_limited_occupation(replace(state, detuning=-1.0)),
                cavity_sideband=quantum_limited_occupation(replace(cavity, detuning=-1.0)),
                cavity_optimal=quantum_limited_occupation(replace(cavity, detuning=-ratio / 2)),
            )
        )
    return rows

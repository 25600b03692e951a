import math

import numpy as np
import pytest

from loopcool.core import engine, reduced
from loopcool.core.config import load_config
from loopcool.core.errors import ConvergenceError, NoStableRegionError, ParameterError
from loopcool.core.params import SystemParams
from loopcool.core.spectrum import Spectrum, resonance_grid
from loopcool.core.utils import hz_to_rad, temperature_for_occupation

from conftest import GAMMA_M, KAPPA, OMEGA_M, random_theory


# -- integration -------------------------------------------------------------


def test_lorentzian_integral_matches_closed_form(rng):
    for _ in range(3):
        params = random_theory(
            rng, detuning=False, temperature=1.0,
            kappa=30.0 * OMEGA_M, phi=math.pi / 2, tau=0.5 * math.pi / OMEGA_M,
        )
        result = reduced.phonon_number(params)
        assert result.stable
        spectrum = reduced.lorentzian_spectrum(
            params, resonance_grid(OMEGA_M + result.delta_omega, result.margin)
        )
        integral = engine.integrate_phonons(spectrum, params.mechanics)
        assert integral.n_bar_high_q == pytest.approx(result.n_bar, rel=1e-5)
        assert integral.relative_difference < 1e-2


@pytest.mark.parametrize("rtol", [1e-4, 1e-6, 1e-8])
def test_high_q_integral_tightens_with_tolerance(resonant_point, rtol):
    params = resonant_point.evolve(temperature=5.0)
    result = reduced.phonon_number(params)
    spectrum = reduced.lorentzian_spectrum(params, resonance_grid(OMEGA_M, result.margin))
    integral = engine.integrate_phonons(spectrum, params.mechanics, rtol=rtol)
    # the two-Lorentzian area is exact: 2 int S dw/2pi = 2n + 1
    assert integral.n_bar_high_q == pytest.approx(result.n_bar, rel=10.0 * rtol)
    assert 0.0 <= integral.error_high_q < 10.0 * rtol * result.n_bar


def test_halving_tolerance_stays_within_error_estimate(resonant_point):
    params = resonant_point.evolve(temperature=5.0)
    result = reduced.phonon_number(params)
    spectrum = reduced.lorentzian_spectrum(params, resonance_grid(OMEGA_M, result.margin))
    coarse = engine.integrate_phonons(spectrum, params.mechanics, rtol=1e-6)
    fine = engine.integrate_phonons(spectrum, params.mechanics, rtol=5e-7)
    assert abs(coarse.n_bar - fine.n_bar) <= 2.0 * coarse.error + 1e-9 * abs(coarse.n_bar)


def test_grid_missing_resonance_is_rejected(resonant_point):
    result = reduced.phonon_number(resonant_point)
    spectrum = reduced.lorentzian_spectrum(
        resonant_point, np.linspace(0.1 * OMEGA_M, 0.2 * OMEGA_M, 101)
    )
    with pytest.raises(ConvergenceError):
        engine.integrate_phonons(spectrum, resonant_point.mechanics)
    assert result.stable


def test_sampled_integration_without_evaluator():
    center, width = OMEGA_M, hz_to_rad(50.0)
    w = np.linspace(center - 400 * width, center + 400 * width, 80001)
    half = width / 2
    values = 3.0 * half / ((w - center) ** 2 + half ** 2)
    spectrum = Spectrum(omega=w, values=values, observable="X_m", model="sampled", linewidth=width)
    mech = SystemParams.theory(omega_m=OMEGA_M, gamma_m=width, kappa=KAPPA, g1=0.0, g2=0.0, eta=0.0).mechanics
    integral = engine.integrate_phonons(spectrum, mech)
    # 2 int S dw/2pi = 3 up to the part of the peak beyond the grid
    assert integral.n_bar_high_q == pytest.approx(1.0, rel=1e-2)


def test_sampled_integration_needs_resolution():
    w = np.linspace(0.5, 1.5, 11) * OMEGA_M
    values = 1.0 / ((w - OMEGA_M) ** 2 + 1.0)
    spectrum = Spectrum(omega=w, values=values, observable="X_m", model="sampled", linewidth=1.0)
    with pytest.raises(ConvergenceError):
        engine.integrate_phonons(spectrum, SystemParams.theory(
            omega_m=OMEGA_M, gamma_m=GAMMA_M, kappa=KAPPA, g1=0.0, g2=0.0, eta=0.0
        ).mechanics)


# -- stability ---------------------------------------------------------------


def test_stability_boundary_in_loop_phase(phase_point):
    phases = np.linspace(-180.0, 180.0, 361)
    margins = np.array([
        engine.stability_check(engine.get_axis("loop_phase_deg").apply(phase_point, p)).margin
        for p in phases
    ])
    assert np.any(margins > 0.0) and np.any(margins < 0.0)
    i = int(np.nonzero(np.sign(margins[:-1]) != np.sign(margins[1:]))[0][0])
    boundary = engine.stability_boundary(phase_point, "loop_phase_deg", phases[i], phases[i + 1])
    assert phases[i] <= boundary <= phases[i + 1]
    at_boundary = engine.stability_check(engine.get_axis("loop_phase_deg").apply(phase_point, boundary))
    gamma_dyn = reduced.dba_baseline(phase_point).gamma
    assert abs(at_boundary.margin) < 1e-6 * gamma_dyn


def test_stability_boundary_needs_sign_change(phase_point):
    with pytest.raises(ParameterError):
        engine.stability_boundary(phase_point.evolve(eta=0.0), "loop_phase_deg", 0.0, 90.0)


def test_backaction_alone_is_stable_on_red_side(rng):
    for _ in range(20):
        params = random_theory(rng, eta=0.0)
        params = params.evolve(detuning=-abs(params.detuning) - 0.01 * params.kappa)
        assert engine.stability_check(params).stable


# -- power bookkeeping -------------------------------------------------------


def test_total_power_round_trip(membrane):
    p1, p_aux = engine.powers_for_total(membrane, 5e-3)
    scaled = membrane.evolve(p1=p1, p_aux_measured=p_aux)
    assert engine.total_power(scaled) == pytest.approx(5e-3, rel=1e-12)
    assert p_aux / p1 == pytest.approx(membrane.drive.p_aux_measured / membrane.drive.p1)


def test_total_power_single_drive(membrane):
    single = membrane.evolve(p_aux_measured=0.0)
    losses = membrane.losses
    assert engine.total_power(single) == pytest.approx(membrane.drive.p1 * (1 + losses.eta_t * losses.eta_aux))


# -- sweeps ------------------------------------------------------------------


def test_axis_registry():
    assert engine.get_axis("detuning_over_kappa").unit == "1"
    assert engine.get_axis("g1_hz").theory_only
    with pytest.raises(ParameterError):
        engine.get_axis("colour")


def test_sweep_rows_independent_of_workers(phase_point):
    spec = engine.SweepSpec(axis="loop_phase_deg", start=-180.0, stop=180.0, points=37, baseline=phase_point)
    serial = engine.sweep(spec)
    threaded = engine.sweep(spec, workers=4)
    assert [row.value for row in serial] == [row.value for row in threaded]
    np.testing.assert_array_equal(
        [row.result.gamma for row in serial], [row.result.gamma for row in threaded]
    )


def test_sweep_records_failures_and_carries_on(phase_point):
    spec = engine.SweepSpec(axis="p1_w", start=1e-4, stop=1e-3, points=4, baseline=phase_point)
    seen = []
    rows = engine.sweep(spec, on_point=seen.append)
    assert len(rows) == len(seen) == 4
    assert all(not row.ok and row.error.startswith("ParameterError") for row in rows)


def test_sweep_family_blocks(phase_point):
    spec = engine.SweepSpec(
        axis="detuning_over_kappa", start=-0.5, stop=-0.1, points=5, baseline=phase_point,
        family_axis="omega_m_tau_over_pi", family_values=(0.1, 0.5),
    )
    rows = engine.sweep(spec)
    assert [row.family for row in rows] == [0.1] * 5 + [0.5] * 5
    assert all(row.ok and math.isnan(row.total_power) for row in rows)


def test_sweep_spec_validation(phase_point):
    with pytest.raises(ParameterError):
        engine.SweepSpec(axis="tau_s", start=0.0, stop=1e-7, points=1, baseline=phase_point)
    with pytest.raises(ParameterError):
        engine.SweepSpec(axis="tau_s", start=0.0, stop=1e-7, points=5, baseline=phase_point, model="exact")
    with pytest.raises(ParameterError):
        engine.SweepSpec(axis="tau_s", start=0.0, stop=1e-7, points=5, baseline=phase_point,
                         family_axis="tau_s")


def test_full_and_reduced_sweeps_agree(phase_point):
    common = dict(axis="loop_phase_deg", start=-150.0, stop=150.0, points=7, baseline=phase_point)
    approx = engine.sweep(engine.SweepSpec(**common))
    exact = engine.sweep(engine.SweepSpec(model="full", **common))
    for a, b in zip(approx, exact):
        assert b.result.gamma == pytest.approx(a.result.gamma, rel=1e-6)
        assert b.result.stable == a.result.stable


def test_delay_family_amplifies_backaction():
    config = load_config(preset="delay_family")
    baseline = engine.get_axis("detuning_over_kappa").apply(config.params, -0.57)
    gamma_dyn = reduced.dba_baseline(baseline).gamma
    # backaction damping scales with g1^2 + g2^2; the first pass alone carries g1^2
    gamma_single = gamma_dyn * baseline.g1 ** 2 / (baseline.g1 ** 2 + baseline.g2 ** 2)
    results = {
        value: reduced.phonon_number(engine.get_axis("omega_m_tau_over_pi").apply(baseline, value))
        for value in config.sweep.family_values
    }
    excess = {value: result.gamma - gamma_dyn for value, result in results.items()}
    assert gamma_single > 0.0
    assert results[1.55].gamma / gamma_single > 3.0
    # red detuned, yet the loop drives the membrane a quarter period in
    assert not results[0.4].stable
    assert min(excess, key=lambda v: abs(excess[v])) == 0.07


def test_lock_phase_scan_beats_backaction_floor():
    config = load_config(preset="lock_phase_scan")
    spec = engine.SweepSpec(
        axis="lock_phase_deg", start=0.0, stop=360.0, points=181, baseline=config.params
    )
    rows = engine.sweep(spec)
    occupations = [row.result.n_bar for row in rows if row.ok and row.result.stable]
    assert occupations
    assert min(occupations) < 7.2
    assert all(row.total_power > 0.0 for row in rows if row.ok)


def test_derived_axes_reject_theory_points(phase_point):
    with pytest.raises(ParameterError):
        engine.get_axis("lock_phase_deg").apply(phase_point, 90.0)


# -- optimization ------------------------------------------------------------


def test_optimizer_reaches_symmetric_limit():
    config = load_config(preset="optimize_limit")
    problem = engine.OptimizationProblem(
        baseline=config.params, free=config.optimize.free,
        grid_points=config.optimize.grid_points, tolerance=config.optimize.tolerance,
    )
    outcome = engine.optimize(problem)
    assert outcome.result.n_bar == pytest.approx(0.566, rel=1e-2)
    assert outcome.values["g2_over_g1"] == pytest.approx(1.0, abs=1e-3)
    assert outcome.result.n_bar <= outcome.grid_best + 1e-12


def test_optimizer_finds_quarter_turn_phases():
    omega_m = hz_to_rad(1e6)
    gamma_m = hz_to_rad(0.1)
    params = SystemParams.theory(
        omega_m=omega_m, gamma_m=gamma_m, kappa=1e4 * omega_m,
        g1=hz_to_rad(1e6), g2=hz_to_rad(1e6), eta=1.0,
        phi=0.0, tau=0.0, temperature=temperature_for_occupation(16000.0, omega_m),
    )
    problem = engine.OptimizationProblem(
        baseline=params, free={"loop_phase_deg": (0.0, 180.0), "omega_m_tau_over_pi": (0.0, 1.0)},
    )
    outcome = engine.optimize(problem)
    assert math.radians(outcome.values["loop_phase_deg"]) == pytest.approx(math.pi / 2, abs=1e-3)
    assert outcome.values["omega_m_tau_over_pi"] * math.pi == pytest.approx(math.pi / 2, abs=1e-3)
    assert outcome.evaluations > 11 ** 2


def test_optimizer_without_stable_region(phase_point):
    problem = engine.OptimizationProblem(
        baseline=phase_point.evolve(eta=0.0), free={"detuning_over_kappa": (0.3, 0.7)}, grid_points=5,
    )
    with pytest.raises(NoStableRegionError):
        engine.optimize(problem)


def test_optimization_problem_validation(phase_point):
    with pytest.raises(ParameterError):
        engine.OptimizationProblem(baseline=phase_point, free={})
    with pytest.raises(ParameterError):
        engine.OptimizationProblem(baseline=phase_point, free={"tau_s": (1e-7, 0.0)})
    with pytest.raises(ParameterError):
        engine.OptimizationProblem(baseline=phase_point, free={"colour": (0.0, 1.0)})


# -- cavity regimes ----------------------------------------------------------


def test_feedback_beats_cavity_cooling_when_unresolved():
    rows = engine.regime_comparison(0.98, [10.0, 100.0, 1000.0])
    for row in rows:
        assert row.feedback_resonant < row.cavity_optimal
        assert row.feedback_resonant < 0.1


def test_no_feedback_advantage_when_resolved():
    rows = engine.regime_comparison(0.98, [0.01, 0.1])
    for row in rows:
        assert row.feedback_sideband > 0.5 * row.cavity_sideband


def test_regime_limit_with_lossy_loop():
    (row,) = engine.regime_comparison(0.22, [1e4])
    assert row.feedback_resonant == pytest.approx(reduced.cooling_limit(0.22), abs=1e-3)


def test_regime_comparison_validation():
    with pytest.raises(ParameterError):
        engine.regime_comparison(0.0, [1.0])
    with pytest.raises(ParameterError):
        engine.regime_comparison(0.5, [0.0])

import logging
import math

import numpy as np
import pytest

from loopcool.core import mbf, reduced
from loopcool.core.errors import ParameterError
from loopcool.core.params import SystemParams
from loopcool.core.utils import hz_to_rad

from conftest import GAMMA_M, KAPPA, OMEGA_M, random_theory


def test_equivalence_filter_reproduces_coherent_loop(rng):
    for _ in range(20):
        params = random_theory(rng, detuning=False, phi=math.pi / 2)
        w = np.linspace(-10.0, 10.0, 4000) * params.kappa
        filt = mbf.equivalence_filter(params)
        response = mbf.generic_filter_response(filt, params, w)
        delta, gamma = reduced.damping_and_shift(params, w)
        s_fb = reduced.feedback_noise_spectrum(params, w)
        np.testing.assert_allclose(response.s_mf, s_fb, rtol=1e-9, atol=1e-12 * np.max(np.abs(s_fb)))
        scale = np.max(np.abs(gamma)) + np.max(np.abs(delta))
        np.testing.assert_allclose(response.gamma, gamma, rtol=1e-9, atol=1e-12 * scale)
        np.testing.assert_allclose(response.delta_omega, delta, rtol=1e-9, atol=1e-12 * scale)


def test_equivalence_filter_detector_efficiency(resonant_point):
    assert mbf.equivalence_filter(resonant_point).eta_det == pytest.approx(0.5)


def test_equivalence_filter_requirements(resonant_point):
    with pytest.raises(ParameterError):
        mbf.equivalence_filter(resonant_point.evolve(phi=0.3))
    with pytest.raises(ParameterError):
        mbf.equivalence_filter(resonant_point.evolve(detuning=-0.1 * KAPPA))


def test_generic_response_undefined_at_zero_frequency(resonant_point):
    filt = mbf.equivalence_filter(resonant_point)
    with pytest.raises(ParameterError):
        mbf.generic_filter_response(filt, resonant_point, np.array([0.0, OMEGA_M]))


def test_cold_damping_rates_match_generic_filter(resonant_point):
    filt = mbf.ColdDampingFilter(gain=1e-3, bandwidth=50 * OMEGA_M, eta_det=0.8)
    gamma, delta = mbf.cold_damping_rates(filt, resonant_point)
    generic = mbf.generic_filter_response(filt.as_generic(), resonant_point, OMEGA_M)
    assert gamma == pytest.approx(generic.gamma, rel=1e-10)
    assert delta == pytest.approx(generic.delta_omega, rel=1e-10)
    assert gamma > 0.0


def test_cold_damping_at_optimal_gain_reaches_limit(resonant_point):
    eta_det = 0.4
    gain = mbf.optimal_gain(eta_det, resonant_point.g1, OMEGA_M)
    assert gain == pytest.approx(4.0 * math.sqrt(eta_det) * resonant_point.g1 / OMEGA_M)
    filt = mbf.ColdDampingFilter(gain=gain, bandwidth=100 * OMEGA_M, eta_det=eta_det)
    assert mbf.cold_damping_occupation(filt, resonant_point) == pytest.approx(
        reduced.cooling_limit(eta_det), rel=1e-12
    )
    detuned_gain = mbf.ColdDampingFilter(gain=2 * gain, bandwidth=100 * OMEGA_M, eta_det=eta_det)
    assert mbf.cold_damping_occupation(detuned_gain, resonant_point) > reduced.cooling_limit(eta_det)


def test_cold_damping_warns_for_narrow_bandwidth(resonant_point, caplog):
    filt = mbf.ColdDampingFilter(gain=1e-3, bandwidth=2 * OMEGA_M)
    with caplog.at_level(logging.WARNING, logger="loopcool"):
        mbf.cold_damping_occupation(filt, resonant_point)
    assert "approximate" in caplog.text


def test_cold_damping_validation(resonant_point):
    with pytest.raises(ParameterError):
        mbf.ColdDampingFilter(gain=1.0, bandwidth=0.0)
    with pytest.raises(ParameterError):
        mbf.ColdDampingFilter(gain=1.0, bandwidth=1.0, eta_det=0.0)
    with pytest.raises(ParameterError):
        mbf.cold_damping_occupation(mbf.ColdDampingFilter(gain=-1.0, bandwidth=1e9), resonant_point)


def test_filter_phase_tends_to_minus_quarter_turn():
    wide = mbf.ColdDampingFilter(gain=1.0, bandwidth=1e6 * OMEGA_M)
    assert mbf.filter_phase(wide, OMEGA_M) == pytest.approx(-math.pi / 2, abs=1e-5)
    narrow = mbf.ColdDampingFilter(gain=1.0, bandwidth=OMEGA_M)
    assert mbf.filter_phase(narrow, OMEGA_M) == pytest.approx(-math.atan(1.0))


def test_named_filter(resonant_point):
    filt = mbf.named_filter("cold-damping", resonant_point, gain=1e-3, bandwidth=1e9, eta_det=0.5)
    assert filt.name == "cold-damping"
    assert mbf.named_filter("equivalence", resonant_point).name == "equivalence"
    with pytest.raises(ParameterError):
        mbf.named_filter("kalman", resonant_point)


def test_measurement_feedback_needs_resonance():
    params = SystemParams.theory(
        omega_m=OMEGA_M, gamma_m=GAMMA_M, kappa=KAPPA, g1=hz_to_rad(1e5), g2=0.0, eta=0.5,
        detuning=-0.3 * KAPPA,
    )
    with pytest.raises(ParameterError):
        mbf.cold_damping_rates(mbf.ColdDampingFilter(1e-3, 1e9), params)

import logging
import math

import numpy as np
import pytest

from loopcool.core import calib, fullmodel, reduced
from loopcool.core.errors import CalibrationError, ParameterError
from loopcool.core.params import CavityMode, SystemParams
from loopcool.core.utils import hz_to_rad, rad_to_hz, temperature_for_occupation

from conftest import KAPPA

OMEGA = hz_to_rad(1e6)
GAMMA = OMEGA / 1e5


def thermal_point(n_bar: float) -> SystemParams:
    return SystemParams.theory(
        omega_m=OMEGA, gamma_m=GAMMA, kappa=KAPPA, g1=0.0, g2=0.0, eta=0.0,
        temperature=temperature_for_occupation(n_bar, OMEGA), g0=hz_to_rad(160.0),
    )


def peak_grid(params: SystemParams, span: float = 20.0, points: int = 4001) -> np.ndarray:
    result = reduced.phonon_number(params)
    center = rad_to_hz(params.omega_m + result.delta_omega)
    width = rad_to_hz(result.margin)
    return np.linspace(center - span * width, center + span * width, points)


def test_transduction_on_resonance():
    cavity = CavityMode(kappa=KAPPA)
    assert abs(calib.cavity_transduction(cavity, 0.0)) == pytest.approx(8.0 / KAPPA, rel=1e-14)
    w = np.array([0.1, 1.0, 3.0]) * KAPPA
    np.testing.assert_allclose(calib.cavity_transduction(cavity, w), 4.0 / (KAPPA / 2 - 1j * w), rtol=1e-12)


@pytest.mark.parametrize("n_bar", [0.5, 5.0, 5e5])
def test_round_trip_through_synthetic_psd(n_bar):
    params = thermal_point(n_bar)
    setup = calib.HomodyneSetup(dc_amplitude=1e4, detection_eta=0.8)
    spectrum = calib.synthesize_psd(setup, params, peak_grid(params))
    recovered = calib.phonons_from_psd(setup, spectrum, params, tail_correction=True)
    assert recovered == pytest.approx(n_bar, rel=5e-3)
    assert float(spectrum.metadata["n_bar"]) == pytest.approx(n_bar, rel=1e-9)


def test_round_trip_with_feedback(resonant_point):
    params = resonant_point.evolve(temperature=20.0)
    expected = reduced.phonon_number(params).n_bar
    setup = calib.HomodyneSetup(dc_amplitude=1e4)
    spectrum = calib.synthesize_psd(setup, params, peak_grid(params))
    recovered = calib.phonons_from_psd(setup, spectrum, params, tail_correction=True)
    assert recovered == pytest.approx(expected, rel=5e-3)


def test_full_model_psd_gives_reduced_occupation(phase_scan_point):
    params = phase_scan_point
    expected = reduced.phonon_number(params).n_bar
    setup = calib.HomodyneSetup(dc_amplitude=1e4)
    reference = calib.synthesize_psd(setup, params, peak_grid(params))
    w = hz_to_rad(reference.frequency_hz)
    lorentzian = reduced.lorentzian_spectrum(params, w)
    modelled = 0.5 * (lorentzian.values + lorentzian.evaluator(-w))
    exact = fullmodel.observable_spectrum(params, "X_m_sym", w).values
    spectrum = calib.MeasuredSpectrum(reference.frequency_hz, reference.psd * exact / modelled)
    recovered = calib.phonons_from_psd(setup, spectrum, params, tail_correction=True)
    assert recovered == pytest.approx(expected, rel=0.02)


def test_gain_scaling_leaves_occupation_unchanged():
    params = thermal_point(100.0)
    setup = calib.HomodyneSetup(dc_amplitude=1e4)
    spectrum = calib.synthesize_psd(setup, params, peak_grid(params))
    scaled = calib.MeasuredSpectrum(spectrum.frequency_hz, 4.0 * spectrum.psd)
    doubled = calib.HomodyneSetup(dc_amplitude=2e4)
    assert calib.phonons_from_psd(doubled, scaled, params) == pytest.approx(
        calib.phonons_from_psd(setup, spectrum, params), rel=1e-12
    )


def test_overestimated_gain_gives_negative_occupation():
    params = thermal_point(5.0)
    spectrum = calib.synthesize_psd(calib.HomodyneSetup(dc_amplitude=1.0), params, peak_grid(params))
    with pytest.raises(CalibrationError) as info:
        calib.phonons_from_psd(calib.HomodyneSetup(dc_amplitude=10.0), spectrum, params)
    assert info.value.n_bar < 0.0


def test_calibration_needs_phase_quadrature_lock():
    params = thermal_point(5.0)
    setup = calib.HomodyneSetup(dc_amplitude=1.0)
    spectrum = calib.synthesize_psd(setup, params, peak_grid(params))
    tilted = calib.HomodyneSetup(dc_amplitude=1.0, lock_angle=0.3)
    with pytest.raises(ParameterError):
        calib.phonons_from_psd(tilted, spectrum, params)


def test_calibration_needs_bare_coupling():
    params = thermal_point(5.0)
    spectrum = calib.synthesize_psd(calib.HomodyneSetup(dc_amplitude=1.0), params, peak_grid(params))
    with pytest.raises(ParameterError):
        calib.phonons_from_psd(calib.HomodyneSetup(dc_amplitude=1.0), spectrum, params.evolve(g0=0.0))


def test_fit_recovers_lorentzian_with_background():
    f = np.linspace(9.9e5, 1.01e6, 3001)
    truth = calib.LorentzianFit(offset=0.2, amplitude=5.0, center=1.0003e6, width=250.0)
    fit = calib.fit_lorentzian(f, truth(f))
    assert fit.center == pytest.approx(truth.center, rel=1e-9)
    assert fit.width == pytest.approx(truth.width, rel=1e-6)
    assert fit.offset == pytest.approx(truth.offset, rel=1e-6)
    assert fit.peak_area() == pytest.approx(5.0 * math.pi * 125.0, rel=1e-6)


def test_shot_noise_normalization_divides_by_background():
    f = np.linspace(9.9e5, 1.01e6, 3001)
    truth = calib.LorentzianFit(offset=0.2, amplitude=5.0, center=1e6, width=250.0)
    normalized = calib.shot_noise_normalized(calib.MeasuredSpectrum(f, truth(f)))
    assert normalized.psd[0] == pytest.approx(truth(f[0]) / 0.2, rel=1e-6)
    assert normalized.metadata["normalized"] == "background"


def test_window_excludes_distant_samples():
    params = thermal_point(50.0)
    setup = calib.HomodyneSetup(dc_amplitude=1.0)
    spectrum = calib.synthesize_psd(setup, params, peak_grid(params))
    full = calib.phonons_from_psd(setup, spectrum, params)
    windowed = calib.phonons_from_psd(setup, spectrum, params, window_linewidths=2.0)
    assert windowed < full


def test_area_ratio_and_reference_occupation():
    assert calib.phonons_from_area_ratio(2.0, 100.0, 0.5) == pytest.approx(25.0)
    assert calib.calibration_occupation(1000.0, 1.0, 9.0) == pytest.approx(100.0)
    with pytest.raises(ParameterError):
        calib.phonons_from_area_ratio(0.0, 1.0, 1.0)
    with pytest.raises(ParameterError):
        calib.calibration_occupation(1000.0, 1.0, -2.0)


def test_load_spectrum_reads_header_and_columns(tmp_path):
    path = tmp_path / "psd.csv"
    path.write_text("# source: analyzer\n# rbw: 10\n1.0e6, 2.0\n1.1e6, 3.0\n\n1.2e6 4.0\n")
    spectrum = calib.load_spectrum(path)
    np.testing.assert_allclose(spectrum.frequency_hz, [1.0e6, 1.1e6, 1.2e6])
    np.testing.assert_allclose(spectrum.psd, [2.0, 3.0, 4.0])
    assert spectrum.metadata == {"source": "analyzer", "rbw": "10"}


def test_load_spectrum_rejects_bad_data(tmp_path):
    path = tmp_path / "psd.csv"
    path.write_text("1.0e6, two\n")
    with pytest.raises(ParameterError):
        calib.load_spectrum(path)
    path.write_text("1.0e6, 1.0, 3.0\n1.1e6, 2.0, 3.0\n")
    with pytest.raises(ParameterError):
        calib.load_spectrum(path)


def test_measured_spectrum_validation():
    with pytest.raises(ParameterError):
        calib.MeasuredSpectrum(np.array([1.0, 2.0]), np.array([1.0, -1.0]))
    with pytest.raises(ParameterError):
        calib.MeasuredSpectrum(np.array([2.0, 1.0]), np.array([1.0, 1.0]))


def test_weak_local_oscillator_warns(caplog):
    setup = calib.HomodyneSetup(dc_amplitude=1.0, lo_amplitude=2.0)
    with caplog.at_level(logging.WARNING, logger="loopcool"):
        assert setup.check_lo_dominance(1.0) is False
    assert "Local oscillator" in caplog.text
    assert calib.HomodyneSetup(dc_amplitude=1.0, lo_amplitude=100.0).check_lo_dominance(1.0)
    assert calib.HomodyneSetup(dc_amplitude=1.0).check_lo_dominance(1e9)

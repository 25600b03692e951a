"""
Homodyne transduction and phonon-number calibration of measured spectra.

Measured spectra are symmetrized two-sided densities in detector units^2/Hz on
a grid of positive frequencies in Hz, so that integrating over df equals
integrating over dw/2pi.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, NamedTuple, Optional, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.optimize import curve_fit

from loopcool.core.errors import CalibrationError, ParameterError
from loopcool.core.params import CavityMode, SystemParams
from loopcool.core.reduced import lorentzian_spectrum
from loopcool.core.spectrum import check_grid
from loopcool.core.utils import ArrayLike, hz_to_rad

logger = logging.getLogger("loopcool.calib")

LO_DOMINANCE = 10.0


@dataclass(frozen=True)
class HomodyneSetup:
    """
    Homodyne detection of the first-pass output.

    Args:
        dc_amplitude: Interference fringe amplitude D0 = 2 alpha_LO alpha1_in
        detection_eta: Path efficiency from cavity to detector
        lock_angle: Homodyne angle theta (rad); calibration needs pi/2
        lo_amplitude: Local oscillator amplitude (sqrt(photons/s)), optional
    """
    dc_amplitude: float
    detection_eta: float = 1.0
    lock_angle: float = math.pi / 2
    lo_amplitude: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.dc_amplitude) and self.dc_amplitude > 0.0):
            raise ParameterError(f"dc_amplitude must be > 0, got {self.dc_amplitude}")
        if not 0.0 < self.detection_eta <= 1.0:
            raise ParameterError(f"detection_eta must lie in (0, 1], got {self.detection_eta}")

    def check_lo_dominance(self, signal_amplitude: float) -> bool:
        if self.lo_amplitude is None:
            return True
        dominant = self.lo_amplitude ** 2 >= LO_DOMINANCE * abs(signal_amplitude) ** 2
        if not dominant:
            logger.warning(
                "Local oscillator is not much stronger than the signal beam; "
                "the homodyne signal is no longer linear in the phase quadrature"
            )
        return dominant


@dataclass(frozen=True, eq=False)
class MeasuredSpectrum:
    frequency_hz: np.ndarray
    psd: np.ndarray
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        check_grid(self.frequency_hz)
        if np.shape(self.psd) != np.shape(self.frequency_hz):
            raise ParameterError("PSD and frequency grid differ in length")
        if np.any(np.asarray(self.psd) < 0.0):
            raise ParameterError("measured PSD must be nonnegative")


class LorentzianFit(NamedTuple):
    """offset + amplitude * (width/2)^2 / ((f - center)^2 + (width/2)^2), all in Hz"""
    offset: float
    amplitude: float
    center: float
    width: float

    def __call__(self, f: ArrayLike) -> ArrayLike:
        half = self.width / 2
        return self.offset + self.amplitude * half ** 2 / ((f - self.center) ** 2 + half ** 2)

    def peak_area(self, lower: float = -math.inf, upper: float = math.inf) -> float:
        """Area of the peak (offset excluded) between two frequencies."""
        half = self.width / 2
        return self.amplitude * half * (
            math.atan((upper - self.center) / half) - math.atan((lower - self.center) / half)
        )


def cavity_transduction(cavity: CavityMode, omega: ArrayLike) -> ArrayLike:
    """
    R(w) = kappa [chi(0) chi(w) + chi*(0) chi*(-w)], chi(w)^-1 = kappa/2 - i(detuning + w).

    At zero detuning R(0) = 8/kappa; away from w = 0 it rolls off as
    4 / (kappa/2 - i w).
    """
    w = np.asarray(omega, dtype=float)

    def chi(x):
        return 1.0 / (cavity.kappa / 2 - 1j * (cavity.detuning + x))

    r = cavity.kappa * (chi(0.0) * chi(w) + np.conj(chi(0.0)) * np.conj(chi(-w)))
    return r if np.ndim(omega) else complex(r)


def fit_lorentzian(frequency_hz: np.ndarray, psd: np.ndarray) -> LorentzianFit:
    """
    Least-squares Lorentzian with flat background.

    Fitting happens in coordinates centered on the peak and scaled by the
    half-maximum width estimate, then maps back to Hz.
    """
    f = np.asarray(frequency_hz, dtype=float)
    y = np.asarray(psd, dtype=float)
    peak = int(np.argmax(y))
    height = y[peak]
    if not height > 0.0:
        raise CalibrationError("cannot fit a Lorentzian to an empty spectrum")
    floor = float(np.min(y))
    above = np.nonzero(y - floor >= 0.5 * (height - floor))[0]
    fwhm = f[above[-1]] - f[above[0]] if above.size > 1 else np.min(np.diff(f))
    fwhm = max(fwhm, np.min(np.diff(f)))

    x = (f - f[peak]) / fwhm
    scaled = y / height

    def model(x, offset, amplitude, center, width):
        half = width / 2
        return offset + amplitude * half ** 2 / ((x - center) ** 2 + half ** 2)

    try:
        popt, _ = curve_fit(
            model, x, scaled, p0=[floor / height, 1.0 - floor / height, 0.0, 1.0], method="lm"
        )
    except (RuntimeError, ValueError) as e:
        raise CalibrationError(f"Lorentzian fit failed: {e}") from e

    offset, amplitude, center, width = popt
    return LorentzianFit(
        offset=float(offset * height),
        amplitude=float(amplitude * height),
        center=float(f[peak] + center * fwhm),
        width=float(abs(width) * fwhm),
    )


def _transduction_gain(setup: HomodyneSetup, params: SystemParams) -> float:
    g0 = params.cavity.g0
    if g0 <= 0.0:
        raise ParameterError("calibration needs the bare coupling g0 > 0")
    return setup.dc_amplitude ** 2 * (setup.detection_eta * g0) ** 2


def synthesize_psd(setup: HomodyneSetup, params: SystemParams, frequency_hz: np.ndarray) -> MeasuredSpectrum:
    """Detector PSD the setup would record for the reduced-model displacement spectrum."""
    f = check_grid(frequency_hz)
    w = hz_to_rad(f)
    spectrum = lorentzian_spectrum(params, w)
    symmetrized = 0.5 * (spectrum.values + spectrum.evaluator(-w))
    gain = 0.5 * _transduction_gain(setup, params) * np.abs(cavity_transduction(params.cavity, w)) ** 2
    return MeasuredSpectrum(
        frequency_hz=f,
        psd=gain * symmetrized,
        metadata={"source": "reduced", "n_bar": f"{spectrum.metadata['n_bar']:.12g}"},
    )


def phonons_from_psd(
    setup: HomodyneSetup,
    spectrum: MeasuredSpectrum,
    params: SystemParams,
    window_linewidths: Optional[float] = None,
    tail_correction: bool = False,
    subtract_background: bool = False,
) -> float:
    """
    Phonon number from a recorded homodyne PSD.

    The PSD is divided by |R(w)|^2 point by point, integrated with the
    trapezoid rule and scaled by 4 / (D0 eta g0)^2; the vacuum half is removed.

    Args:
        setup: Homodyne setup locked at theta = pi/2
        spectrum: Measured symmetrized PSD
        params: System parameters (cavity and g0)
        window_linewidths: Integrate only +- this many fitted linewidths around the peak
        tail_correction: Add the fitted Lorentzian area outside the integration range
        subtract_background: Remove the fitted flat background before integrating

    Raises:
        CalibrationError: The inferred occupation is negative
    """
    if abs(setup.lock_angle - math.pi / 2) > 1e-6:
        raise ParameterError("calibration needs the homodyne lock at theta = pi/2")
    if params.drive.p1 > 0.0 and params.couplings is None:
        setup.check_lo_dominance(params.mean_fields.alpha1_in)

    f = np.asarray(spectrum.frequency_hz, dtype=float)
    transduction = np.abs(cavity_transduction(params.cavity, hz_to_rad(f))) ** 2
    referred = np.asarray(spectrum.psd, dtype=float) / transduction

    fit = None
    if window_linewidths is not None or tail_correction or subtract_background:
        fit = fit_lorentzian(f, referred)
    if subtract_background:
        referred = referred - fit.offset
    if window_linewidths is not None:
        keep = np.abs(f - fit.center) <= window_linewidths * fit.width
        if np.count_nonzero(keep) < 2:
            raise CalibrationError("integration window holds fewer than two samples")
        f, referred = f[keep], referred[keep]

    area = float(trapezoid(referred, f))
    if tail_correction:
        area += fit.peak_area(0.0, f[0]) + fit.peak_area(f[-1], math.inf)

    n_bar = 4.0 / _transduction_gain(setup, params) * area - 0.5
    if n_bar < 0.0:
        logger.error(f"Calibration gives negative occupation {n_bar:.4g}")
        raise CalibrationError(f"negative phonon number {n_bar:.4g}", n_bar=n_bar)
    return n_bar


def phonons_from_area_ratio(calib_area: float, calib_occupation: float, measured_area: float) -> float:
    """n = n_calib / A_calib * A_DD"""
    if not calib_area > 0.0:
        raise ParameterError(f"calibration area must be > 0, got {calib_area}")
    return calib_occupation / calib_area * measured_area


def calibration_occupation(n_th: float, gamma_m: float, gamma_opt: float) -> float:
    """Single-pass reference occupation n_th gamma_m / (gamma_m + Gamma_m)."""
    if gamma_m + gamma_opt <= 0.0:
        raise ParameterError("reference measurement must be stable")
    return n_th * gamma_m / (gamma_m + gamma_opt)


def shot_noise_normalized(spectrum: MeasuredSpectrum) -> MeasuredSpectrum:
    """PSD divided by its fitted flat background."""
    fit = fit_lorentzian(spectrum.frequency_hz, spectrum.psd)
    if not fit.offset > 0.0:
        raise CalibrationError("fitted background is not positive; cannot normalize")
    return MeasuredSpectrum(
        frequency_hz=spectrum.frequency_hz,
        psd=np.asarray(spectrum.psd) / fit.offset,
        metadata={**spectrum.metadata, "normalized": "background"},
    )


def load_spectrum(path: Union[str, Path]) -> MeasuredSpectrum:
    """
    Read a two-column spectrum file (frequency in Hz, PSD).

    Lines starting with '#' form the header; ``# key: value`` lines become
    metadata. Columns may be separated by commas or whitespace.
    """
    metadata: Dict[str, str] = {}
    with open(path) as f:
        for line in f:
            if line.startswith("#"):
                key, sep, value = line.lstrip("#").partition(":")
                if sep:
                    metadata[key.strip()] = value.strip()
    try:
        frame = pd.read_csv(path, sep=r"[\s,]+", comment="#", header=None, engine="python")
        data = frame.to_numpy(dtype=float)
    except (ValueError, pd.errors.ParserError) as e:
        raise ParameterError(f"{path}: non-numeric spectrum data ({e})") from e
    if data.ndim != 2 or data.shape[1] != 2:
        raise ParameterError(f"{path}: expected two columns (frequency_hz, psd)")
    return MeasuredSpectrum(frequency_hz=data[:, 0], psd=data[:, 1], metadata=metadata)

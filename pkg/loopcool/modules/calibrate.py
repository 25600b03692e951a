import asyncio

import numpy as np

from loopcool.core import calib, reduced
from loopcool.core.errors import ConfigError, InstabilityError
from loopcool.core.utils import hz_to_rad, rad_to_hz
from loopcool.modules.base import BaseCommand, ResultTable

SYNTHETIC_SPAN = 20.0
SYNTHETIC_POINTS = 4001


class Calibrate(BaseCommand):
    """
    Phonon number from a homodyne PSD.

    Without ``calibration.spectrum_file`` the PSD is synthesized from the
    scenario, which turns the command into a round-trip check.
    """

    @property
    def name(self) -> str:
        return "Calibration"

    async def validate(self) -> bool:
        if self.config.calibration is None:
            raise ConfigError("calibration: section required for the calibrate command")
        return True

    def _synthesize(self, setup: calib.HomodyneSetup) -> calib.MeasuredSpectrum:
        params = self.config.params
        estimate = reduced.phonon_number(params)
        if not estimate.stable:
            raise InstabilityError("cannot synthesize a spectrum for an unstable point", margin=estimate.margin)
        center = rad_to_hz(params.omega_m + estimate.delta_omega)
        width = rad_to_hz(estimate.margin)
        f = np.linspace(center - SYNTHETIC_SPAN * width, center + SYNTHETIC_SPAN * width, SYNTHETIC_POINTS)
        return calib.synthesize_psd(setup, params, f[f > 0.0])

    async def execute(self) -> ResultTable:
        settings = self.config.calibration
        params = self.config.params
        setup = calib.HomodyneSetup(dc_amplitude=settings.dc_amplitude, detection_eta=settings.detection_eta)
        if settings.spectrum_file is not None:
            spectrum = await asyncio.to_thread(calib.load_spectrum, settings.spectrum_file)
            source = str(settings.spectrum_file)
        else:
            spectrum = self._synthesize(setup)
            source = "synthetic"

        n_bar = calib.phonons_from_psd(
            setup,
            spectrum,
            params,
            window_linewidths=settings.window_linewidths,
            tail_correction=settings.tail_correction,
            subtract_background=settings.subtract_background,
        )
        referred = spectrum.psd / np.abs(
            calib.cavity_transduction(params.cavity, hz_to_rad(spectrum.frequency_hz))
        ) ** 2
        fit = calib.fit_lorentzian(spectrum.frequency_hz, referred)

        table = ResultTable(
            title=self.name,
            columns=[("quantity", ""), ("value", ""), ("unit", "")],
        )
        table.notes["source"] = source
        table.add("n_bar", n_bar, "")
        if "n_bar" in spectrum.metadata:
            table.add("n_bar_expected", float(spectrum.metadata["n_bar"]), "")
        table.add("fit_center", fit.center, "Hz")
        table.add("fit_width", fit.width, "Hz")
        table.add("fit_offset", fit.offset, "units^2/Hz")
        table.add("fit_amplitude", fit.amplitude, "units^2/Hz")
        table.add("samples", len(spectrum.frequency_hz), "")
        return table

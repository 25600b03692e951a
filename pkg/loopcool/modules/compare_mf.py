import math

import numpy as np

from loopcool.core import mbf, reduced
from loopcool.core.errors import ParameterError
from loopcool.core.utils import rad_to_hz
from loopcool.modules.base import BaseCommand, ResultTable

DEVIATION_GRID_POINTS = 4001
DEVIATION_SPAN = 10.0


class CompareMf(BaseCommand):
    """Coherent loop against measurement-based feedback on cavity resonance"""

    @property
    def name(self) -> str:
        return "Measurement-Based Comparison"

    async def validate(self) -> bool:
        if self.config.params.detuning != 0.0:
            raise ParameterError("compare-mf needs the cavity on resonance (detuning 0)")
        return True

    def _equivalence_rows(self, table: ResultTable) -> None:
        params = self.config.params
        om, gm = params.omega_m, params.gamma_m
        try:
            filt = mbf.equivalence_filter(params)
        except ParameterError as e:
            self.logger.warning(f"Equivalent filter skipped: {e}")
            return
        response = mbf.generic_filter_response(filt, params, np.array([om, -om]))
        gamma, s_minus = response.gamma[0], response.s_mf[1]
        margin = gm + gamma
        n_bar = (gm * params.n_th + s_minus) / margin if margin > 0.0 else math.nan
        table.add("equivalent_mbf", rad_to_hz(gamma), rad_to_hz(response.delta_omega[0]), rad_to_hz(s_minus), n_bar)

        kappa = params.kappa
        w = np.linspace(-DEVIATION_SPAN * kappa, DEVIATION_SPAN * kappa, DEVIATION_GRID_POINTS)
        w = w[w != 0.0]
        s_mf = mbf.generic_filter_response(filt, params, w).s_mf
        s_fb = reduced.feedback_noise_spectrum(params, w)
        deviation = float(np.max(np.abs(s_mf - s_fb) / np.abs(s_fb)))
        table.notes["max_relative_deviation"] = deviation
        self.logger.info(f"Equivalent filter: max |S_mf - S_fb| / S_fb = {deviation:.3g}")

    async def execute(self) -> ResultTable:
        params = self.config.params
        table = ResultTable(
            title=self.name,
            columns=[("scheme", ""), ("gamma", "Hz"), ("delta_omega", "Hz"), ("a_plus", "Hz"), ("n_bar", "")],
        )
        coherent = reduced.phonon_number(params)
        table.add(
            "coherent", rad_to_hz(coherent.gamma), rad_to_hz(coherent.delta_omega),
            rad_to_hz(coherent.a_plus), coherent.n_bar,
        )
        self._equivalence_rows(table)

        settings = self.config.mbf
        if settings is not None and params.g1 > 0.0:
            eta_det = settings.eta_det if settings.eta_det is not None else params.eta
            gain = settings.gain
            if gain is None:
                gain = mbf.optimal_gain(eta_det, params.g1, params.omega_m)
            filt = mbf.ColdDampingFilter(gain=gain, bandwidth=settings.bandwidth, eta_det=eta_det)
            gamma, delta_omega = mbf.cold_damping_rates(filt, params)
            n_bar = mbf.cold_damping_occupation(filt, params)
            table.add("cold_damping", rad_to_hz(gamma), rad_to_hz(delta_omega), math.nan, n_bar)
            table.notes["cold_damping_gain"] = gain
            table.notes["cold_damping_phase_deg"] = math.degrees(mbf.filter_phase(filt, params.omega_m))
            table.notes["cooling_limit_eta_det"] = reduced.cooling_limit(eta_det)
        return table

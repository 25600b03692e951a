import asyncio
import math

from loopcool.core import engine, reduced
from loopcool.core.errors import InstabilityError, NoBackactionCoolingError
from loopcool.core.utils import rad_to_hz
from loopcool.modules.base import BaseCommand, ResultTable


class Cooling(BaseCommand):
    """Single-point cooling figures for the scenario"""

    @property
    def name(self) -> str:
        return "Cooling"

    async def execute(self) -> ResultTable:
        params = self.config.params
        backend = self.backend()
        result = await asyncio.to_thread(backend.cooling, params)
        if not result.stable:
            raise InstabilityError(
                f"unstable point: gamma_m + Gamma_m = {result.margin:.4g} rad/s",
                margin=result.margin,
            )
        stability = engine.stability_check(params)

        table = ResultTable(
            title=f"{self.name} ({backend.name} model)",
            columns=[("quantity", ""), ("value", ""), ("unit", "")],
        )
        table.add("delta_omega", rad_to_hz(result.delta_omega), "Hz")
        table.add("gamma_opt", rad_to_hz(result.gamma), "Hz")
        table.add("a_plus", rad_to_hz(result.a_plus), "Hz")
        table.add("a_minus", rad_to_hz(result.a_minus), "Hz")
        table.add("margin", rad_to_hz(result.margin), "Hz")
        table.add("shifted_margin", rad_to_hz(stability.shifted_margin), "Hz")
        table.add("n_bar", result.n_bar, "")
        table.add("n_th", params.n_th, "")
        table.add("c_qu", result.c_qu, "")
        table.add("g1", rad_to_hz(params.g1), "Hz")
        table.add("g2", rad_to_hz(params.g2), "Hz")
        table.add("eta", params.eta, "")
        table.add("phi", math.degrees(params.phi), "deg")
        if params.couplings is None:
            table.add("total_power", engine.total_power(params), "W")

        try:
            baseline = reduced.dba_baseline(params)
            table.add("gamma_dyn", rad_to_hz(baseline.gamma), "Hz")
            table.add("n_bar_dyn", baseline.n_bar, "")
        except NoBackactionCoolingError:
            self.logger.debug("Zero detuning: no backaction-only baseline")
        return table

import math

from loopcool.core import reduced
from loopcool.core.errors import NoBackactionCoolingError
from loopcool.modules.base import BaseCommand, ResultTable


class Limits(BaseCommand):
    """Closed-form cooling limits for the scenario"""

    @property
    def name(self) -> str:
        return "Cooling Limits"

    async def execute(self) -> ResultTable:
        params = self.config.params
        kappa, om = params.kappa, params.omega_m
        table = ResultTable(
            title=self.name,
            columns=[("quantity", ""), ("eta", ""), ("value", "")],
        )
        table.add("dba_floor", math.nan, reduced.dba_floor(kappa, om))
        table.add("dba_limit_half_kappa", math.nan, reduced.dba_limit(kappa, -kappa / 2, om))
        try:
            table.add("dba_limit_scenario", math.nan, reduced.dba_limit(kappa, params.detuning, om))
        except NoBackactionCoolingError:
            self.logger.debug("Zero detuning: no backaction limit at the scenario point")

        for eta in sorted({params.eta, self.config.regimes.eta, 1.0}):
            if 0.0 < eta <= 1.0:
                table.add("cooling_limit", eta, reduced.cooling_limit(eta))

        if params.g1 > 0.0 and params.g2 > 0.0 and params.eta > 0.0:
            table.add("asymmetric_optimum", params.eta, reduced.asymmetric_optimum(params.g1, params.g2, params.eta))
        table.add("quantum_limited", params.eta, reduced.quantum_limited_occupation(params))
        return table

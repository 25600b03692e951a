from loopcool.core import engine
from loopcool.modules.base import BaseCommand, ResultTable


class Regimes(BaseCommand):
    """Coherent feedback versus cavity cooling across kappa / omega_m"""

    @property
    def name(self) -> str:
        return "Cavity Regimes"

    async def execute(self) -> ResultTable:
        settings = self.config.regimes
        rows = engine.regime_comparison(settings.eta, settings.kappa_over_omega_m)
        table = ResultTable(
            title=self.name,
            columns=[
                ("kappa_over_omega_m", ""),
                ("n_feedback_resonant", ""),
                ("n_feedback_sideband", ""),
                ("n_cavity_sideband", ""),
                ("n_cavity_half_kappa", ""),
            ],
        )
        table.notes["eta"] = settings.eta
        for row in rows:
            table.add(*row)
        return table

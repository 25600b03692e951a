import asyncio

from rich.console import Console

from loopcool.core import engine
from loopcool.core.errors import ConfigError
from loopcool.core.utils import rad_to_hz
from loopcool.modules.base import BaseCommand, ResultTable


class Optimize(BaseCommand):
    """Minimum reduced-model occupation over the free feedback parameters"""

    @property
    def name(self) -> str:
        return "Optimization"

    async def validate(self) -> bool:
        if self.config.optimize is None:
            raise ConfigError("optimize: section required for the optimize command")
        self.backend()
        return True

    async def execute(self) -> ResultTable:
        settings = self.config.optimize
        problem = engine.OptimizationProblem(
            baseline=self.config.params,
            free=settings.free,
            grid_points=settings.grid_points,
            tolerance=settings.tolerance,
        )
        console = Console(quiet=self.options.quiet)
        with console.status(f"[cyan]Scanning {settings.grid_points}^{len(settings.free)} grid and refining..."):
            outcome = await asyncio.to_thread(engine.optimize, problem, self.options.workers)

        if outcome.converged:
            console.print(f"[green]✓ Converged after {outcome.evaluations} evaluations[/green]")
        else:
            console.print(f"[yellow]⊘ Not converged: {outcome.message}[/yellow]")

        table = ResultTable(
            title=self.name,
            columns=[("quantity", ""), ("value", ""), ("unit", "")],
        )
        for name, value in outcome.values.items():
            table.add(name, value, engine.get_axis(name).unit)
        result = outcome.result
        table.add("n_bar", result.n_bar, "")
        table.add("grid_best_n_bar", outcome.grid_best, "")
        table.add("gamma_opt", rad_to_hz(result.gamma), "Hz")
        table.add("delta_omega", rad_to_hz(result.delta_omega), "Hz")
        table.add("margin", rad_to_hz(outcome.margin), "Hz")
        table.add("converged", outcome.converged, "")
        table.add("evaluations", outcome.evaluations, "")
        return table

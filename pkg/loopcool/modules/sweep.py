import asyncio
import logging
import math

from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn, BarColumn, TaskProgressColumn

from loopcool.core import engine
from loopcool.core.errors import ConfigError
from loopcool.core.utils import rad_to_hz
from loopcool.modules.base import BaseCommand, ResultTable


class Sweep(BaseCommand):
    """One-dimensional parameter scan, optionally repeated over a family axis"""

    @property
    def name(self) -> str:
        return "Parameter Sweep"

    @property
    def default_model(self) -> str:
        return self.config.sweep.model if self.config.sweep else "reduced"

    async def validate(self) -> bool:
        if self.config.sweep is None:
            raise ConfigError("sweep: section required for the sweep command")
        return True

    def build_spec(self) -> engine.SweepSpec:
        settings = self.config.sweep
        return engine.SweepSpec(
            axis=settings.axis,
            start=settings.start,
            stop=settings.stop,
            points=settings.points,
            baseline=self.config.params,
            model=self.options.model or settings.model,
            family_axis=settings.family_axis,
            family_values=settings.family_values,
        )

    async def execute(self) -> ResultTable:
        spec = self.build_spec()
        backend = self.backend()
        total = len(spec.grid())
        completed = {'count': 0}

        def tick(row: engine.SweepRow) -> None:
            completed['count'] += 1

        console = Console(quiet=self.options.quiet)
        console.print(Panel.fit(
            f"[bold cyan]{self.name}[/bold cyan]\n"
            f"[yellow]Axis:[/yellow] {spec.axis} from {spec.start:g} to {spec.stop:g} ({spec.points} points)\n"
            f"[yellow]Family:[/yellow] {spec.family_axis or 'none'}\n"
            f"[yellow]Model:[/yellow] {backend.name}, {backend.workers} worker(s)",
            border_style="cyan"
        ))

        # Progress bar owns the terminal; keep only warnings and errors meanwhile
        root = logging.getLogger("loopcool")
        old_level = root.level
        root.setLevel(max(old_level, logging.WARNING))
        try:
            with Progress(
                SpinnerColumn(),
                TextColumn("[bold blue]{task.description}"),
                BarColumn(),
                TaskProgressColumn(),
                console=console
            ) as progress:
                task = progress.add_task(f"[cyan]Evaluating {total} points...", total=total)
                job = asyncio.create_task(asyncio.to_thread(backend.sweep, spec, tick))
                while not job.done():
                    await asyncio.sleep(0.1)
                    progress.update(task, completed=completed['count'])
                rows = await job
                progress.update(task, completed=total)
        finally:
            root.setLevel(old_level)

        failed = [row for row in rows if not row.ok]
        if failed:
            console.print(f"[yellow]⊘ {len(failed)} of {len(rows)} points failed[/yellow]")
        console.print(f"[green]✓ {len(rows) - len(failed)} points evaluated[/green]")
        return self.tabulate(spec, rows)

    def tabulate(self, spec: engine.SweepSpec, rows) -> ResultTable:
        axis = engine.get_axis(spec.axis)
        columns = []
        if spec.family_axis:
            family = engine.get_axis(spec.family_axis)
            columns.append((family.name, family.unit))
        columns += [
            (axis.name, axis.unit),
            ("delta_omega", "Hz"),
            ("gamma_opt", "Hz"),
            ("delta_omega_dyn", "Hz"),
            ("gamma_dyn", "Hz"),
            ("a_plus", "Hz"),
            ("a_minus", "Hz"),
            ("margin", "Hz"),
            ("n_bar", ""),
            ("stable", ""),
            ("total_power", "W"),
            ("error", ""),
        ]
        table = ResultTable(title=f"{self.name} ({spec.model} model)", columns=columns)
        table.notes["axis"] = spec.axis
        table.notes["model"] = spec.model
        if spec.family_axis:
            table.notes["family_axis"] = spec.family_axis

        for row in rows:
            values = [row.family] if spec.family_axis else []
            r = row.result
            if r is None:
                values += [row.value] + [math.nan] * 8 + [False, math.nan, row.error]
            else:
                values += [
                    row.value,
                    rad_to_hz(r.delta_omega),
                    rad_to_hz(r.gamma),
                    rad_to_hz(row.delta_omega_dyn),
                    rad_to_hz(row.gamma_dyn),
                    rad_to_hz(r.a_plus),
                    rad_to_hz(r.a_minus),
                    rad_to_hz(r.margin),
                    r.n_bar,
                    r.stable,
                    row.total_power,
                    "",
                ]
            table.add(*values)
        return table

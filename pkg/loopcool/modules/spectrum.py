import asyncio

import numpy as np
from rich.console import Console
from rich.panel import Panel

from loopcool.core import engine, reduced
from loopcool.core.errors import InstabilityError
from loopcool.core.spectrum import resonance_grid
from loopcool.core.utils import rad_to_hz
from loopcool.modules.base import BaseCommand, ResultTable

ALL_OBSERVABLES = "all"


class Spectrum(BaseCommand):
    """Displacement and field-quadrature spectra around the mechanical resonance"""

    @property
    def name(self) -> str:
        return "Spectrum"

    async def execute(self) -> ResultTable:
        params = self.config.params
        settings = self.config.spectrum
        backend = self.backend()

        estimate = reduced.phonon_number(params)
        if not estimate.stable:
            raise InstabilityError(
                f"no steady state: gamma_m + Gamma_m = {estimate.margin:.4g} rad/s",
                margin=estimate.margin,
            )
        center = params.omega_m + estimate.delta_omega
        grid = resonance_grid(center, estimate.margin, settings.span_linewidths, settings.points)
        grid = grid[grid > 0.0]

        observables = (
            backend.observables() if settings.observable == ALL_OBSERVABLES else [settings.observable]
        )
        spectra = await asyncio.to_thread(
            lambda: [backend.spectrum(params, name, grid) for name in observables]
        )

        table = ResultTable(
            title=f"{self.name} ({backend.name} model)",
            columns=[("frequency", "Hz"), ("offset", "Hz")] + [(f"S_{s.observable}", "s/rad") for s in spectra],
        )
        offsets = rad_to_hz(grid - params.omega_m)
        for i, w in enumerate(grid):
            table.add(rad_to_hz(w), offsets[i], *(s.values[i] for s in spectra))

        table.notes["n_bar_closed_form"] = estimate.n_bar
        table.notes["linewidth_hz"] = rad_to_hz(estimate.margin)
        for s in spectra:
            if s.observable not in ("X_m", "X_m_sym"):
                continue
            integral = await asyncio.to_thread(
                engine.integrate_phonons, s, params.mechanics, self.options.tolerance
            )
            table.notes[f"n_bar_integrated_{s.observable}"] = integral.n_bar
            table.notes[f"n_bar_high_q_{s.observable}"] = integral.n_bar_high_q
            table.notes[f"n_bar_error_{s.observable}"] = integral.error
            table.notes[f"n_bar_high_q_error_{s.observable}"] = integral.error_high_q
            self.logger.debug(
                f"{s.observable}: integrated n = {integral.n_bar:.6g}, "
                f"high-Q n = {integral.n_bar_high_q:.6g}, closed form {estimate.n_bar:.6g}"
            )

        if not self.options.quiet:
            console = Console()
            console.print(Panel.fit(
                f"[bold cyan]{self.name}[/bold cyan]\n"
                f"[yellow]Model:[/yellow] {backend.name}\n"
                f"[yellow]Observables:[/yellow] {', '.join(observables)}\n"
                f"[yellow]Grid:[/yellow] {len(grid)} points, "
                f"±{settings.span_linewidths:g} linewidths around {rad_to_hz(center):.6g} Hz\n"
                f"[yellow]n (closed form):[/yellow] {estimate.n_bar:.6g}",
                border_style="cyan"
            ))
        return table

import click
import asyncio
import json
import sys
from typing import Optional
from rich.console import Console
from rich.table import Table
from rich.panel import Panel
import logging
from pathlib import Path
from datetime import datetime

from loopcool import __version__
from loopcool.core.config import ScenarioConfig, available_presets, load_config
from loopcool.core.errors import LoopcoolError
from loopcool.modules.base import CommandStatus, ResultTable, RunOptions
from loopcool.modules.calibrate import Calibrate
from loopcool.modules.compare_mf import CompareMf
from loopcool.modules.cooling import Cooling
from loopcool.modules.limits import Limits
from loopcool.modules.optimize import Optimize
from loopcool.modules.regimes import Regimes
from loopcool.modules.spectrum import Spectrum
from loopcool.modules.sweep import Sweep

console = Console()
logger = logging.getLogger("loopcool")

COMMANDS = {
    'spectrum': {
        'name': 'Displacement and quadrature spectra',
        'class': Spectrum,
    },
    'cooling': {
        'name': 'Single-point cooling figures',
        'class': Cooling,
    },
    'sweep': {
        'name': 'Parameter sweep',
        'class': Sweep,
    },
    'optimize': {
        'name': 'Feedback parameter optimization',
        'class': Optimize,
    },
    'compare-mf': {
        'name': 'Measurement-based feedback comparison',
        'class': CompareMf,
    },
    'regimes': {
        'name': 'Cavity regime comparison',
        'class': Regimes,
    },
    'limits': {
        'name': 'Closed-form cooling limits',
        'class': Limits,
    },
    'calibrate': {
        'name': 'Phonon number from a homodyne PSD',
        'class': Calibrate,
    },
}

EXIT_IO = 4
DISPLAY_LIMIT = 50


def setup_logging(verbose: bool) -> None:
    for handler in [h for h in logger.handlers if getattr(h, 'loopcool', False)]:
        logger.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('%(message)s'))
    handler.loopcool = True
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, LoopcoolError):
        return error.exit_code
    if isinstance(error, OSError):
        return EXIT_IO
    return 1


def fail(error: BaseException) -> None:
    """Write the machine-readable error record to stderr and exit."""
    code = exit_code_for(error)
    record = {"error": type(error).__name__, "message": str(error), "exit_code": code}
    click.echo(json.dumps(record, sort_keys=True), err=True)
    sys.exit(code)


def _format(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_table(path: Path, command: str, config: ScenarioConfig, table: ResultTable) -> None:
    """CSV with '#' header lines echoing version, scenario and resolved parameters."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = table.to_frame()
    with open(path, 'w', newline='') as f:
        f.write(f"# loopcool {__version__}\n")
        f.write(f"# command: {command}\n")
        f.write(f"# scenario: {config.source}\n")
        if config.description:
            f.write(f"# description: {config.description}\n")
        for key, value in config.params.describe().items():
            f.write(f"# param.{key}: {_format(value)}\n")
        for key, value in table.notes.items():
            f.write(f"# {key}: {_format(value)}\n")
        frame.to_csv(f, index=False, float_format="%.10g", na_rep="nan", lineterminator="\n")


def show_table(table: ResultTable) -> None:
    rich_table = Table(title=table.title, show_header=True, header_style="bold magenta")
    for i, heading in enumerate(table.header):
        rich_table.add_column(heading, style="cyan" if i == 0 else None, justify="left" if i == 0 else "right")
    for row in table.rows[:DISPLAY_LIMIT]:
        rich_table.add_row(*(_format(v) for v in row))
    console.print(rich_table)
    if len(table) > DISPLAY_LIMIT:
        console.print(f"[dim]... and {len(table) - DISPLAY_LIMIT} more rows (see the output file)[/dim]")
    for key, value in table.notes.items():
        console.print(f"[yellow]{key}:[/yellow] {_format(value)}")


def run_command(
    command: str,
    config_path: Optional[str],
    preset: Optional[str],
    out: Optional[str],
    model: Optional[str],
    workers: int,
    tolerance: float,
    verbose: bool,
    quiet: bool,
) -> None:
    setup_logging(verbose)
    try:
        config = load_config(config_path, preset)
    except (LoopcoolError, OSError) as e:
        logger.error(f"Cannot load scenario: {e}")
        fail(e)

    info = COMMANDS[command]
    if not quiet:
        console.print(Panel.fit(
            f"[bold cyan]loopcool {__version__}[/bold cyan]\n\n"
            f"[yellow]Command:[/yellow] {info['name']}\n"
            f"[yellow]Scenario:[/yellow] {config.source}\n"
            f"[yellow]Output:[/yellow] {out or 'results/'}",
            border_style="cyan"
        ))

    options = RunOptions(model=model, workers=workers, tolerance=tolerance, quiet=quiet)
    instance = info['class'](config, options, logger)
    result = asyncio.run(instance.run())

    if result.status != CommandStatus.SUCCESS:
        console.print(f"[red]✗ Failed: {result.error}[/red]")
        fail(result.exception or LoopcoolError(result.error or "command skipped"))

    table = result.data
    if not quiet:
        show_table(table)

    # Auto-save to results/ when no --out is given
    if not out:
        results_dir = Path("results")
        timestamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        stem = Path(config.source.split('+')[-1].replace('preset:', '')).stem or 'scenario'
        out = results_dir / f"{stem}_{command}_{timestamp}.csv"
        if not quiet:
            console.print(f"\n[cyan]Auto-saving to: {out}[/cyan]")

    try:
        write_table(Path(out), command, config, table)
    except OSError as e:
        logger.error(f"Cannot write {out}: {e}")
        fail(e)
    if not quiet:
        console.print(f"[green]✓ Saved {len(table)} rows to {out}[/green]")


def scenario_options(func):
    options = [
        click.option('--config', '-c', 'config_path', type=click.Path(dir_okay=False),
                     help='Scenario YAML file'),
        click.option('--preset', '-p', help='Bundled preset name (see `loopcool presets`)'),
        click.option('--out', '-o', type=click.Path(dir_okay=False),
                     help='Output CSV (default: results/<scenario>_<command>_<time>.csv)'),
        click.option('--model', '-m', type=click.Choice(['reduced', 'full']), default=None,
                     help='Model backend (default: reduced, or the sweep section\'s model)'),
        click.option('--workers', '-w', type=click.IntRange(min=1), default=1, show_default=True,
                     help='Worker threads for sweeps, grids and spectra'),
        click.option('--tolerance', type=click.FloatRange(min=0.0, min_open=True, max=1.0, max_open=True),
                     default=1e-6, show_default=True, help='Relative tolerance of adaptive integration'),
        click.option('--verbose', '-v', is_flag=True, help='Debug logging'),
        click.option('--quiet', '-q', is_flag=True, help='Only write the output file'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def make_command(command: str) -> click.Command:
    @click.command(name=command, help=COMMANDS[command]['name'])
    @scenario_options
    def cmd(**kwargs):
        run_command(command, **kwargs)
    return cmd


@click.command()
def commands():
    """List all available commands"""
    console.print("[bold cyan]Available Commands[/bold cyan]\n")

    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Command", style="cyan")
    table.add_column("Description", style="yellow")
    table.add_column("Models")

    from loopcool.tools.wrappers import available_backends
    backends = available_backends()
    for name, info in COMMANDS.items():
        command_id = info['class'].__name__.lower()
        models = [b for b, cls in sorted(backends.items()) if command_id in cls.commands]
        table.add_row(name, info['name'], ", ".join(models))

    console.print(table)


@click.command()
def presets():
    """List bundled scenario presets"""
    for name in available_presets():
        console.print(f"  • {name}")


# Group commands
@click.group()
@click.version_option(version=__version__, prog_name='loopcool')
def main():
    """loopcool - coherent-feedback cooling of a cavity-coupled mechanical oscillator

    Examples:

      loopcool limits --preset membrane
      loopcool sweep --preset delay_family -o delays.csv
      loopcool spectrum --preset phase_scan --model full --workers 4
    """
    pass


for _name in COMMANDS:
    main.add_command(make_command(_name))
main.add_command(commands)
main.add_command(presets)


if __name__ == '__main__':
    main()

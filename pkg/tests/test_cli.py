import json
import logging

import pandas as pd
import pytest
from click.testing import CliRunner

from loopcool import __version__
from loopcool.cli import main
from loopcool.core.config import load_config
from loopcool.modules.base import RunOptions
from loopcool.modules.calibrate import Calibrate
from loopcool.modules.cooling import Cooling


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture(autouse=True)
def detach_cli_handlers():
    yield
    logger = logging.getLogger("loopcool")
    for handler in [h for h in logger.handlers if getattr(h, "loopcool", False)]:
        logger.removeHandler(handler)


def header_notes(path):
    notes = {}
    for line in path.read_text().splitlines():
        if line.startswith("# ") and ": " in line:
            key, value = line[2:].split(": ", 1)
            notes[key] = value
    return notes


def error_record(output):
    line = [l for l in output.splitlines() if l.startswith("{")][-1]
    return json.loads(line)


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_commands_listing(runner):
    result = runner.invoke(main, ["commands"])
    assert result.exit_code == 0
    assert "compare-mf" in result.output


def test_presets_listing(runner):
    result = runner.invoke(main, ["presets"])
    assert result.exit_code == 0
    assert "membrane" in result.output


def test_limits_for_membrane_preset(runner, tmp_path):
    out = tmp_path / "limits.csv"
    result = runner.invoke(main, ["limits", "--preset", "membrane", "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    text = out.read_text()
    assert text.startswith(f"# loopcool {__version__}\n# command: limits\n# scenario: preset:membrane\n")
    frame = pd.read_csv(out, comment="#")
    floor = frame.loc[frame["quantity"] == "dba_floor", "value"].iloc[0]
    assert floor == pytest.approx(7.24, abs=0.01)
    limits = frame.loc[frame["quantity"] == "cooling_limit"]
    assert limits.loc[limits["eta"] == 1.0, "value"].iloc[0] == 0.0


def test_output_is_deterministic(runner, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (first, second):
        assert runner.invoke(main, ["cooling", "-p", "membrane", "-o", str(path), "-q"]).exit_code == 0
    assert first.read_bytes() == second.read_bytes()


def test_cooling_header_records_parameters(runner, tmp_path):
    out = tmp_path / "cooling.csv"
    result = runner.invoke(main, ["cooling", "-p", "membrane", "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    notes = header_notes(out)
    assert notes["param.phase_mode"] == "derived"
    assert float(notes["param.kappa"]) > 0.0
    frame = pd.read_csv(out, comment="#")
    assert {"n_bar", "gamma_opt", "gamma_dyn", "total_power"} <= set(frame["quantity"])


def test_sweep_writes_units_in_header(runner, tmp_path):
    out = tmp_path / "phase.csv"
    result = runner.invoke(main, ["sweep", "-p", "phase_scan", "-o", str(out), "-q", "-w", "2"])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out, comment="#")
    assert len(frame) == 73
    assert "lock_phase_deg [deg]" in frame.columns
    assert "gamma_opt [Hz]" in frame.columns
    assert header_notes(out)["model"] == "reduced"


def test_sweep_with_full_model(runner, tmp_path):
    scenario = tmp_path / "short.yaml"
    scenario.write_text("preset: phase_scan\nsweep:\n  points: 5\n")
    out = tmp_path / "full.csv"
    result = runner.invoke(main, ["sweep", "-c", str(scenario), "-m", "full", "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    assert header_notes(out)["model"] == "full"
    assert len(pd.read_csv(out, comment="#")) == 5


def test_compare_mf_equivalence(runner, tmp_path):
    out = tmp_path / "mbf.csv"
    result = runner.invoke(main, ["compare-mf", "-p", "mbf_equivalence", "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    assert float(header_notes(out)["max_relative_deviation"]) < 1e-9
    frame = pd.read_csv(out, comment="#")
    assert list(frame["scheme"]) == ["coherent", "equivalent_mbf", "cold_damping"]


def test_regimes(runner, tmp_path):
    out = tmp_path / "regimes.csv"
    result = runner.invoke(main, ["regimes", "-p", "regimes", "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    assert len(pd.read_csv(out, comment="#")) > 0


def test_calibration_round_trip(runner, tmp_path):
    out = tmp_path / "calib.csv"
    result = runner.invoke(main, ["calibrate", "-p", "calibration", "-o", str(out), "-q"])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(out, comment="#").set_index("quantity")
    assert frame.loc["n_bar", "value"] == pytest.approx(frame.loc["n_bar_expected", "value"], rel=5e-3)


def test_malformed_key_exits_with_config_error(runner, tmp_path):
    scenario = tmp_path / "bad.yaml"
    scenario.write_text("preset: membrane\nmechanics:\n  colour: 1\n")
    out = tmp_path / "never.csv"
    result = runner.invoke(main, ["cooling", "-c", str(scenario), "-o", str(out), "-q"])
    assert result.exit_code == 2
    record = error_record(result.output)
    assert record["error"] == "ConfigError"
    assert record["exit_code"] == 2
    assert "mechanics.colour" in record["message"]
    assert not out.exists()


def test_missing_scenario_file_exits_with_io_error(runner, tmp_path):
    result = runner.invoke(main, ["cooling", "-c", str(tmp_path / "absent.yaml"), "-q"])
    assert result.exit_code == 4
    assert error_record(result.output)["exit_code"] == 4


def test_unstable_point_exits_with_instability(runner, tmp_path):
    scenario = tmp_path / "antidamped.yaml"
    scenario.write_text("preset: mbf_equivalence\nloop:\n  phi_deg: -90.0\n")
    out = tmp_path / "never.csv"
    result = runner.invoke(main, ["cooling", "-c", str(scenario), "-o", str(out), "-q"])
    assert result.exit_code == 3
    assert error_record(result.output)["error"] == "InstabilityError"
    assert not out.exists()


def test_missing_section_exits_with_config_error(runner, tmp_path):
    result = runner.invoke(main, ["sweep", "-p", "membrane", "-o", str(tmp_path / "x.csv"), "-q"])
    assert result.exit_code == 2


def test_command_without_scenario(runner):
    result = runner.invoke(main, ["limits", "-q"])
    assert result.exit_code == 2


def test_backends_are_detected_from_wrappers():
    config = load_config(preset="membrane")
    logger = logging.getLogger("loopcool")
    assert Cooling(config, RunOptions(), logger).get_backends() == ["full", "reduced"]
    assert Calibrate(config, RunOptions(), logger).get_backends() == ["reduced"]

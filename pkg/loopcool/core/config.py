"""
Scenario files: YAML documents with a strict schema.

Units at the boundary are Hz, W, K, degrees and seconds (or omega_m tau / pi);
they are converted to rad/s and rad here and nowhere else. A document may
name a bundled preset under ``preset:`` and override any of its keys.
"""
import copy
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from loopcool.core.errors import ConfigError, LoopcoolError
from loopcool.core.params import (
    DEFAULT_WAVELENGTH_NM,
    CavityMode,
    Couplings,
    DriveConfig,
    FeedbackLoop,
    LossBudget,
    MechanicalMode,
    PhaseMode,
    SystemParams,
)
from loopcool.core.utils import hz_to_rad, wavelength_to_omega

logger = logging.getLogger("loopcool.config")

PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"

SCHEMA: Dict[str, Tuple[str, ...]] = {
    "mechanics": ("frequency_hz", "quality_factor", "linewidth_hz", "temperature_k"),
    "cavity": ("linewidth_hz", "detuning_hz", "detuning_over_kappa", "g0_hz", "laser_wavelength_nm"),
    "losses": ("eta1", "eta2", "eta_t", "eta_aux"),
    "drive": ("p1_w", "p_aux_measured_w", "lock_phase_deg"),
    "loop": ("phase_mode", "phi_deg", "lock_offset_deg", "tau_seconds", "omega_m_tau_over_pi"),
    "couplings": ("g1_hz", "g2_hz", "eta"),
    "sweep": ("axis", "start", "stop", "points", "family_axis", "family_values", "model"),
    "optimize": ("free", "grid_points", "tolerance"),
    "spectrum": ("observable", "span_linewidths", "points"),
    "mbf": ("gain", "bandwidth_hz", "eta_det"),
    "regimes": ("eta", "kappa_over_omega_m"),
    "calibration": (
        "spectrum_file", "dc_amplitude", "detection_eta", "window_linewidths",
        "tail_correction", "subtract_background",
    ),
}

TOP_LEVEL = ("preset", "description")


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads 1e6 and 1.9e6 as floats"""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?[0-9][0-9_]*[eE][-+]?[0-9]+
        |[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


@dataclass(frozen=True)
class SweepSettings:
    axis: str
    start: float
    stop: float
    points: int = 101
    model: str = "reduced"
    family_axis: Optional[str] = None
    family_values: Tuple[float, ...] = ()


@dataclass(frozen=True)
class OptimizeSettings:
    free: Dict[str, Tuple[float, float]]
    grid_points: int = 11
    tolerance: float = 1e-8


@dataclass(frozen=True)
class SpectrumSettings:
    observable: str = "X_m"
    span_linewidths: float = 20.0
    points: int = 2001


@dataclass(frozen=True)
class MbfSettings:
    """Cold-damping filter; ``gain`` None selects the optimal gain"""
    bandwidth: float
    gain: Optional[float] = None
    eta_det: Optional[float] = None


@dataclass(frozen=True)
class RegimeSettings:
    eta: float = 0.98
    kappa_over_omega_m: Tuple[float, ...] = tuple(np.logspace(-2, 3, 26))


@dataclass(frozen=True)
class CalibrationSettings:
    spectrum_file: Optional[Path]
    dc_amplitude: float
    detection_eta: float = 1.0
    window_linewidths: Optional[float] = None
    tail_correction: bool = False
    subtract_background: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """Resolved scenario: the parameter set plus per-command settings"""
    params: SystemParams
    source: str
    description: str = ""
    sweep: Optional[SweepSettings] = None
    optimize: Optional[OptimizeSettings] = None
    spectrum: SpectrumSettings = field(default_factory=SpectrumSettings)
    mbf: Optional[MbfSettings] = None
    regimes: RegimeSettings = field(default_factory=RegimeSettings)
    calibration: Optional[CalibrationSettings] = None
    document: Dict[str, Any] = field(default_factory=dict, repr=False)

    def get(self, key: str, default: Any = None) -> Any:
        """Dotted lookup into the merged document, e.g. ``get('sweep.axis')``."""
        node: Any = self.document
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node


# -- document handling -------------------------------------------------------


def available_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"Unknown preset '{name}'. Available: {', '.join(available_presets())}")
    return path


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse one YAML file; OSError propagates for missing or unreadable files."""
    with open(path) as f:
        try:
            document = yaml.load(f, Loader=_Loader)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: invalid YAML ({e})") from e
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return document


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_document(document: Dict[str, Any], seen: Tuple[str, ...] = ()) -> Dict[str, Any]:
    """Expand ``preset:`` inheritance (presets may inherit from presets)."""
    name = document.get("preset")
    if name is None:
        return document
    if not isinstance(name, str):
        raise ConfigError("preset: expected a preset name")
    if name in seen:
        raise ConfigError(f"preset: circular inheritance through '{name}'")
    parent = resolve_document(read_document(preset_path(name)), seen + (name,))
    child = {k: v for k, v in document.items() if k != "preset"}
    return deep_merge(parent, child)


def check_schema(document: Dict[str, Any]) -> None:
    for section, body in document.items():
        if section in TOP_LEVEL:
            continue
        if section not in SCHEMA:
            raise ConfigError(f"{section}: unknown section")
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a mapping")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key")


# -- typed access ------------------------------------------------------------


class _Section:
    """Typed reads from one section; errors name the dotted key."""

    def __init__(self, document: Dict[str, Any], name: str):
        self.name = name
        self.body: Dict[str, Any] = document.get(name) or {}

    def __contains__(self, key: str) -> bool:
        return key in self.body

    def _key(self, key: str) -> str:
        return f"{self.name}.{key}"

    def number(self, key: str, default: Any = ..., positive: bool = False) -> Optional[float]:
        if key not in self.body:
            if default is ...:
                raise ConfigError(f"{self._key(key)}: missing required key")
            return default
        value = self.body[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{self._key(key)}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{self._key(key)}: must be finite")
        if positive and value <= 0:
            raise ConfigError(f"{self._key(key)}: must be > 0, got {value}")
        return float(value)

    def integer(self, key: str, default: Any = ...) -> int:
        if key not in self.body:
            if default is ...:
                raise ConfigError(f"{self._key(key)}: missing required key")
            return default
        value = self.body[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self._key(key)}: expected an integer, got {value!r}")
        return value

    def string(self, key: str, default: Any = ..., choices: Optional[Tuple[str, ...]] = None) -> Optional[str]:
        if key not in self.body:
            if default is ...:
                raise ConfigError(f"{self._key(key)}: missing required key")
            return default
        value = self.body[key]
        if not isinstance(value, str):
            raise ConfigError(f"{self._key(key)}: expected a string, got {value!r}")
        if choices is not None and value not in choices:
            raise ConfigError(f"{self._key(key)}: expected one of {', '.join(choices)}, got '{value}'")
        return value

    def boolean(self, key: str, default: bool = False) -> bool:
        value = self.body.get(key, default)
        if not isinstance(value, bool):
            raise ConfigError(f"{self._key(key)}: expected true or false, got {value!r}")
        return value

    def numbers(self, key: str, default: Any = ...) -> Tuple[float, ...]:
        if key not in self.body:
            if default is ...:
                raise ConfigError(f"{self._key(key)}: missing required key")
            return default
        value = self.body[key]
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{self._key(key)}: expected a non-empty list of numbers")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(f"{self._key(key)}: expected a list of numbers, got {value!r}")
        return tuple(float(v) for v in value)

    def one_of(self, *keys: str, required: bool = True) -> Optional[str]:
        present = [k for k in keys if k in self.body]
        if len(present) > 1:
            raise ConfigError(f"{self.name}: give only one of {', '.join(keys)}")
        if not present:
            if required:
                raise ConfigError(f"{self.name}: one of {', '.join(keys)} is required")
            return None
        return present[0]


def _build_params(document: Dict[str, Any]) -> SystemParams:
    if "mechanics" not in document or "cavity" not in document:
        raise ConfigError("scenario needs both 'mechanics' and 'cavity' sections")
    mech, cav = _Section(document, "mechanics"), _Section(document, "cavity")
    losses, drive = _Section(document, "losses"), _Section(document, "drive")
    loop, couplings = _Section(document, "loop"), _Section(document, "couplings")

    omega_m = hz_to_rad(mech.number("frequency_hz", positive=True))
    if mech.one_of("quality_factor", "linewidth_hz") == "quality_factor":
        gamma_m = omega_m / mech.number("quality_factor", positive=True)
    else:
        gamma_m = hz_to_rad(mech.number("linewidth_hz", positive=True))

    kappa = hz_to_rad(cav.number("linewidth_hz", positive=True))
    detuning_key = cav.one_of("detuning_hz", "detuning_over_kappa", required=False)
    if detuning_key == "detuning_hz":
        detuning = hz_to_rad(cav.number("detuning_hz"))
    elif detuning_key == "detuning_over_kappa":
        detuning = cav.number("detuning_over_kappa") * kappa
    else:
        detuning = 0.0

    tau_key = loop.one_of("tau_seconds", "omega_m_tau_over_pi")
    if tau_key == "tau_seconds":
        tau = loop.number("tau_seconds")
    else:
        tau = loop.number("omega_m_tau_over_pi") * math.pi / omega_m
    phase_mode = PhaseMode(loop.string("phase_mode", "direct", choices=("direct", "derived")))

    if "couplings" in document and phase_mode is PhaseMode.DERIVED:
        raise ConfigError("loop.phase_mode: 'derived' cannot be combined with a couplings section")

    try:
        theory = None
        if "couplings" in document:
            theory = Couplings(
                g1=hz_to_rad(couplings.number("g1_hz")),
                g2=hz_to_rad(couplings.number("g2_hz")),
                eta=couplings.number("eta", None),
            )
        return SystemParams(
            mechanics=MechanicalMode(omega_m, gamma_m, mech.number("temperature_k", 0.0)),
            cavity=CavityMode(
                kappa=kappa,
                detuning=detuning,
                g0=hz_to_rad(cav.number("g0_hz", 0.0)),
                omega_L=wavelength_to_omega(
                    cav.number("laser_wavelength_nm", DEFAULT_WAVELENGTH_NM, positive=True)
                ),
            ),
            losses=LossBudget(
                eta1=losses.number("eta1", 1.0),
                eta2=losses.number("eta2", 1.0),
                eta_t=losses.number("eta_t", 1.0),
                eta_aux=losses.number("eta_aux", 1.0),
            ),
            drive=DriveConfig(
                p1=drive.number("p1_w", 0.0),
                p_aux_measured=drive.number("p_aux_measured_w", 0.0),
                aux_lock_phase=math.radians(drive.number("lock_phase_deg", 0.0)),
            ),
            loop=FeedbackLoop(
                phi=math.radians(loop.number("phi_deg", 90.0)),
                tau=tau,
                phase_mode=phase_mode,
                lock_offset=math.radians(loop.number("lock_offset_deg", 0.0)),
            ),
            couplings=theory,
        )
    except LoopcoolError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid parameters: {e}") from e


def _sweep_settings(document: Dict[str, Any]) -> Optional[SweepSettings]:
    if "sweep" not in document:
        return None
    s = _Section(document, "sweep")
    family_axis = s.string("family_axis", None)
    family_values = s.numbers("family_values", ())
    if (family_axis is None) != (not family_values):
        raise ConfigError("sweep: family_axis and family_values go together")
    points = s.integer("points", 101)
    if points < 2:
        raise ConfigError(f"sweep.points: need at least 2, got {points}")
    return SweepSettings(
        axis=s.string("axis"),
        start=s.number("start"),
        stop=s.number("stop"),
        points=points,
        model=s.string("model", "reduced", choices=("reduced", "full")),
        family_axis=family_axis,
        family_values=family_values,
    )


def _optimize_settings(document: Dict[str, Any]) -> Optional[OptimizeSettings]:
    if "optimize" not in document:
        return None
    s = _Section(document, "optimize")
    free = s.body.get("free")
    if not isinstance(free, dict) or not free:
        raise ConfigError("optimize.free: expected a mapping of variable -> [lo, hi]")
    bounds = {}
    for name, value in free.items():
        if (
            not isinstance(value, list)
            or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            raise ConfigError(f"optimize.free.{name}: expected [lo, hi]")
        if not value[0] < value[1]:
            raise ConfigError(f"optimize.free.{name}: bounds must be ordered")
        bounds[name] = (float(value[0]), float(value[1]))
    return OptimizeSettings(
        free=bounds,
        grid_points=s.integer("grid_points", 11),
        tolerance=s.number("tolerance", 1e-8, positive=True),
    )


def _calibration_settings(document: Dict[str, Any], base_dir: Optional[Path]) -> Optional[CalibrationSettings]:
    if "calibration" not in document:
        return None
    s = _Section(document, "calibration")
    spectrum_file = s.string("spectrum_file", None)
    path = None
    if spectrum_file is not None:
        path = Path(spectrum_file)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
    return CalibrationSettings(
        spectrum_file=path,
        dc_amplitude=s.number("dc_amplitude", positive=True),
        detection_eta=s.number("detection_eta", 1.0, positive=True),
        window_linewidths=s.number("window_linewidths", None, positive=True),
        tail_correction=s.boolean("tail_correction"),
        subtract_background=s.boolean("subtract_background"),
    )


def build_config(document: Dict[str, Any], source: str = "<document>", base_dir: Optional[Path] = None) -> ScenarioConfig:
    """Validate a merged document and convert it to a ScenarioConfig."""
    document = resolve_document(document)
    check_schema(document)
    spectrum, mbf, regimes = (_Section(document, n) for n in ("spectrum", "mbf", "regimes"))

    mbf_settings = None
    if "mbf" in document:
        mbf_settings = MbfSettings(
            bandwidth=hz_to_rad(mbf.number("bandwidth_hz", positive=True)),
            gain=mbf.number("gain", None),
            eta_det=mbf.number("eta_det", None, positive=True),
        )

    return ScenarioConfig(
        params=_build_params(document),
        source=source,
        description=str(document.get("description", "")),
        sweep=_sweep_settings(document),
        optimize=_optimize_settings(document),
        spectrum=SpectrumSettings(
            observable=spectrum.string("observable", "X_m"),
            span_linewidths=spectrum.number("span_linewidths", 20.0, positive=True),
            points=spectrum.integer("points", 2001),
        ),
        mbf=mbf_settings,
        regimes=RegimeSettings(
            eta=regimes.number("eta", 0.98, positive=True),
            kappa_over_omega_m=regimes.numbers("kappa_over_omega_m", RegimeSettings().kappa_over_omega_m),
        ),
        calibration=_calibration_settings(document, base_dir),
        document=document,
    )


def load_config(path: Optional[Union[str, Path]] = None, preset: Optional[str] = None) -> ScenarioConfig:
    """
    Load a scenario from a file, a bundled preset, or a preset overridden by a file.

    Raises:
        ConfigError: Schema violation or unknown preset
        OSError: The file cannot be read
    """
    if path is None and preset is None:
        raise ConfigError("give --config PATH or --preset NAME")
    document: Dict[str, Any] = {"preset": preset} if preset else {}
    source = f"preset:{preset}" if preset else ""
    base_dir = None
    if path is not None:
        override = read_document(path)
        if preset and "preset" in override:
            raise ConfigError("preset: given both on the command line and in the file")
        document = deep_merge(document, override)
        source = f"{source}+{path}" if source else str(path)
        base_dir = Path(path).resolve().parent
    logger.debug(f"Loading scenario from {source}")
    return build_config(document, source=source, base_dir=base_dir)

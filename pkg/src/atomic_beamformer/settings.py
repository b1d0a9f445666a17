"""
Run configuration for atomic-beamformer.

This module holds the documented defaults table, merges a user YAML document
over it and converts every dimensioned entry to SI. The normalized form can be
dumped back to YAML and parses to an identical RunConfig.
"""

import copy
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml
from platformdirs import user_log_dir
from scipy import constants

from .app_meta import APP_NAME, ORG_NAME
from .core.atom import AtomSystem, Environment, SusceptibilityPoint, operating_point
from .core.continuous import ContinuousCell, MeasurementWindow, ReceiverChain
from .core.errors import ConfigError
from .core.fields import FieldScene, PlaneWave, bbr_radiance
from .core.segmental import SegmentalCell
from .utils.file_utils import sha256_text
from .utils.units import format_quantity, parse_count, parse_number, parse_quantity

logger = logging.getLogger(__name__)

# Documented defaults: a cesium cell at room temperature with a 6.9458 GHz LO.
# rf_dipole is a fitted value: it places the BBR/PSN crossover of the SNR
# sweep, not the BBR-limited level (see DESIGN.md).
DEFAULT_SETTINGS: Dict[str, Any] = {
    "atom": {
        "probe_wavelength": "852 nm",
        "rf_dipole": "1.3318e-25 C m",
        "atom_mass": "132.905451961 u",
        "chi_override": {
            "chi": "42.4 1/m",
            "chi_slope": "2.08e-5 1/(m Hz)",
        },
    },
    "environment": {
        "temperature": "290 K",
        "doppler_nodes": 41,
        "doppler_truncation": 5.0,
        "doppler_method": "gauss-hermite",
    },
    "scene": {
        "lo": {
            "frequency": "6.9458 GHz",
            "strength": "34.6 mV/m",
            "angle": "0 deg",
            "phase": "0 rad",
        },
        "signal": {
            "strength": "154.9 uV/m",
            "angle": "0 deg",
            "phase": "0 rad",
        },
        "interferers": [],
    },
    "cell": {
        "kind": "continuous",
        "length": "20 cm",
        "segments": 1,
        "gap": "0 cm",
    },
    "receiver": {
        "input_power": "120 uW",
        "quantum_efficiency": 0.8,
    },
    "window": {
        "duration": "10 us",
        "beat_frequency": "100 kHz",
    },
    "experiment": {
        "susceptibility": {"points": 201, "span": [0.1, 10.0]},
        "pattern": {
            "lo_angles": ["0 deg", "45 deg", "90 deg"],
            "lengths": ["1 cm", "6 cm", "20 cm"],
            "points": 721,
        },
        "snr_sweep": {
            "variable": "length",
            "start": "1 cm",
            "stop": "40 cm",
            "points": 79,
        },
        "seg_sweep": {
            "variable": "segments",
            "values": [1, 2, 4, 8, 16, 32, 64, 128, 256, 1024, 10000, 100000],
        },
        "capacity": {
            "trials": 1000,
            "seed": 0,
            "strength_ratio": 0.5,
            "angle": "45 deg",
            "snr_offset_db": 0.0,
        },
        "oracle": {
            "trials": 10000,
            "seed": 0,
            "grid_points": 2000,
            "amplitude_ratio": 1e-3,
            "points_per_wavelength": 64,
            "time_points": 64,
        },
    },
}

# Fields required in levels mode; the decay rates and probe dipole come from
# external atomic data and have no defaults.
LEVEL_DEFAULTS: Dict[str, Any] = {
    "probe_rabi": "5.7 MHz",
    "coupling_rabi": "0.89 MHz",
    "coupling_wavelength": "509 nm",
    "atomic_density": "4.89e10 cm-3",
    "delta_p": "0 rad/s",
    "delta_c": "0 rad/s",
    "delta_l": "0 rad/s",
}
LEVEL_REQUIRED = ("gamma2", "gamma3", "gamma4", "mu12")

# Mutually exclusive spellings; a user entry for one drops the default of the other.
_WAVE_ALTERNATIVES = (("angle", "theta"),)
_LO_ALTERNATIVES = (("angle", "theta"), ("frequency", "angular_frequency"))
# Cell fields may also be spelled with their symbols.
_CELL_SYMBOLS = {"length": "L", "segments": "M", "gap": "d_g", "pitch": "d_e"}
_CELL_ALTERNATIVES = (
    ("length", "L"),
    ("segments", "M"),
    ("gap", "pitch", "d_g", "d_e"),
)

SECTION_FIELDS: Dict[str, Tuple[str, ...]] = {
    "atom": ("probe_wavelength", "rf_dipole", "atom_mass", "chi_override", "levels"),
    "environment": (
        "temperature",
        "doppler_nodes",
        "doppler_truncation",
        "doppler_method",
    ),
    "scene": ("lo", "signal", "interferers"),
    "cell": ("kind", "length", "segments", "gap", "pitch"),
    "receiver": ("input_power", "quantum_efficiency"),
    "window": ("duration", "cycles", "beat_frequency"),
    "experiment": None,
}
WAVE_FIELDS = ("strength", "angle", "theta", "phase", "frequency", "angular_frequency")


class _UniqueKeyLoader(yaml.SafeLoader):
    """Safe loader that rejects repeated keys inside one mapping."""

    def construct_mapping(self, node, deep=False):
        seen = set()
        for key_node, _ in node.value:
            key = self.construct_object(key_node, deep=deep)
            if key in seen:
                line = key_node.start_mark.line + 1
                raise ConfigError(str(key), f"duplicate entry at line {line}")
            seen.add(key)
        return super().construct_mapping(node, deep=deep)


def _merge_with_defaults(
    default: Dict[str, Any], user: Dict[str, Any], path: Tuple[str, ...] = ()
) -> Dict[str, Any]:
    """Merge user values over defaults, honoring mutually exclusive spellings."""
    result = copy.deepcopy(default)
    for group in _alternatives_for(path):
        given = [name for name in group if name in user]
        if len(given) > 1:
            raise ConfigError(
                ".".join(path) or "config",
                f"give exactly one of {', '.join(group)}; found {', '.join(given)}",
            )
        if given:
            for name in group:
                if name != given[0]:
                    result.pop(name, None)
    for key, value in user.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _merge_with_defaults(result[key], value, path + (key,))
        else:
            result[key] = copy.deepcopy(value)
    return result


def _alternatives_for(path: Tuple[str, ...]):
    if path == ("scene", "lo"):
        return _LO_ALTERNATIVES
    if path == ("scene", "signal"):
        return _WAVE_ALTERNATIVES
    if path == ("atom",):
        return (("chi_override", "levels"),)
    if path == ("cell",):
        return _CELL_ALTERNATIVES
    if path == ("window",):
        return (("duration", "cycles"),)
    return ()


def _require_mapping(value: Any, field_name: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(field_name, f"expected a mapping, got {type(value).__name__}")
    return value


def _check_fields(section: Dict[str, Any], name: str, allowed) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown field")


def _require(section: Dict[str, Any], key: str, name: str) -> Any:
    if key not in section:
        raise ConfigError(f"{name}.{key}", "missing")
    return section[key]


@dataclass(frozen=True)
class AtomSection:
    """Atom parameters in either override or levels mode."""
    probe_wavelength: float
    rf_dipole: float
    atom_mass: float
    chi: Optional[float] = None
    chi_slope: Optional[float] = None
    levels: Optional[AtomSystem] = None

    @property
    def mode(self) -> str:
        return "levels" if self.levels is not None else "override"


@dataclass(frozen=True)
class CellSection:
    """Cell layout; segmental cells fix either the gap or the pitch."""
    kind: str
    length: float
    segments: int = 1
    gap: Optional[float] = None
    pitch: Optional[float] = None

    def build(
        self,
        point: SusceptibilityPoint,
        length: Optional[float] = None,
        segments: Optional[int] = None,
    ) -> Union[ContinuousCell, SegmentalCell]:
        length = self.length if length is None else length
        segments = self.segments if segments is None else segments
        if self.kind == "continuous" and segments == 1:
            return ContinuousCell(length, point)
        if self.pitch is not None:
            return SegmentalCell.with_pitch(length, segments, self.pitch, point)
        return SegmentalCell(length, segments, self.gap or 0.0, point)


@dataclass(frozen=True)
class RunConfig:
    """Fully parsed run configuration in SI units."""
    atom: AtomSection
    environment: Environment
    scene: FieldScene
    cell: CellSection
    receiver: ReceiverChain
    window: MeasurementWindow
    experiment: Dict[str, Any]
    normalized: Dict[str, Any] = field(compare=False, repr=False, default_factory=dict)

    @cached_property
    def point(self) -> SusceptibilityPoint:
        """Susceptibility linearization at the LO operating point."""
        rabi = self.atom.rf_dipole * self.scene.lo.strength / constants.hbar
        if self.atom.levels is None:
            return SusceptibilityPoint(
                chi=self.atom.chi,
                chi_slope=self.atom.chi_slope,
                operating_rabi=rabi,
                dipole_moment=self.atom.rf_dipole,
            )
        return operating_point(
            self.atom.levels, self.environment, self.scene.lo.strength
        )

    @property
    def radiance(self) -> float:
        return bbr_radiance(self.scene.lo.frequency, self.environment.temperature)

    @property
    def config_hash(self) -> str:
        return sha256_text(yaml.safe_dump(self.normalized, sort_keys=False))

    def build_cell(
        self, length: Optional[float] = None, segments: Optional[int] = None
    ):
        return self.cell.build(self.point, length=length, segments=segments)

    def derived(self) -> Dict[str, Any]:
        """Derived quantities echoed with the normalized configuration."""
        cell = self.build_cell()
        point = self.point
        dc_current = self.receiver.dc_current(self.cell.length, point.chi)
        velocity = self.environment.thermal_velocity(self.atom.atom_mass)
        values = {
            "lo_wavelength": format_quantity(self.scene.wavelength, "length"),
            "input_current": f"{self.receiver.input_current!r} A",
            "dc_current": f"{dc_current!r} A",
            "lo_rabi": format_quantity(point.operating_rabi, "angular_frequency"),
            "chi": format_quantity(point.chi, "attenuation"),
            "chi_slope": format_quantity(point.chi_slope, "chi_slope"),
            "psn_constant": f"{self.receiver.psn_constant(point)!r} V2 s / m2",
            "radiance": f"{self.radiance!r} V2 s / m2",
            "bandwidth": format_quantity(self.window.bandwidth, "frequency"),
            "thermal_velocity": f"{velocity!r} m / s",
        }
        if isinstance(cell, SegmentalCell):
            values.update({
                "segment_length": format_quantity(cell.segment_length, "length"),
                "pitch": format_quantity(cell.pitch, "length"),
                "effective_length": format_quantity(cell.effective_length, "length"),
            })
        else:
            values.update({
                "segment_length": format_quantity(cell.length, "length"),
                "pitch": format_quantity(cell.length, "length"),
                "effective_length": format_quantity(cell.length, "length"),
            })
        return values


def _parse_atom(section: Dict[str, Any]) -> Tuple[AtomSection, Dict]:
    _check_fields(section, "atom", SECTION_FIELDS["atom"])
    probe_wavelength = parse_quantity(
        _require(section, "probe_wavelength", "atom"),
        "atom.probe_wavelength",
        "length",
    )
    rf_dipole = parse_quantity(
        _require(section, "rf_dipole", "atom"), "atom.rf_dipole", "dipole"
    )
    atom_mass = parse_quantity(
        _require(section, "atom_mass", "atom"), "atom.atom_mass", "mass"
    )
    normalized = {
        "probe_wavelength": format_quantity(probe_wavelength, "length"),
        "rf_dipole": format_quantity(rf_dipole, "dipole"),
        "atom_mass": format_quantity(atom_mass, "mass"),
    }

    if "chi_override" in section and "levels" in section:
        raise ConfigError("atom", "give exactly one of chi_override, levels")
    if "chi_override" in section:
        override = _require_mapping(section["chi_override"], "atom.chi_override")
        _check_fields(override, "atom.chi_override", ("chi", "chi_slope"))
        chi = parse_quantity(
            _require(override, "chi", "atom.chi_override"),
            "atom.chi_override.chi",
            "attenuation",
        )
        slope = parse_quantity(
            _require(override, "chi_slope", "atom.chi_override"),
            "atom.chi_override.chi_slope",
            "chi_slope",
        )
        normalized["chi_override"] = {
            "chi": format_quantity(chi, "attenuation"),
            "chi_slope": format_quantity(slope, "chi_slope"),
        }
        atom = AtomSection(
            probe_wavelength, rf_dipole, atom_mass, chi=chi, chi_slope=slope
        )
        return atom, normalized
    if "levels" not in section:
        raise ConfigError("atom", "give exactly one of chi_override, levels")

    levels = {**LEVEL_DEFAULTS, **_require_mapping(section["levels"], "atom.levels")}
    _check_fields(levels, "atom.levels", LEVEL_REQUIRED + tuple(LEVEL_DEFAULTS))
    for name in LEVEL_REQUIRED:
        if name not in levels:
            raise ConfigError(
                f"atom.levels.{name}",
                "required in levels mode (user-supplied atomic data)",
            )
    kinds = {
        "gamma2": "angular_frequency",
        "gamma3": "angular_frequency",
        "gamma4": "angular_frequency",
        "mu12": "dipole",
        "probe_rabi": "angular_frequency",
        "coupling_rabi": "angular_frequency",
        "coupling_wavelength": "length",
        "atomic_density": "density",
        "delta_p": "angular_frequency",
        "delta_c": "angular_frequency",
        "delta_l": "angular_frequency",
    }
    values = {
        name: parse_quantity(levels[name], f"atom.levels.{name}", kind)
        for name, kind in kinds.items()
    }
    try:
        system = AtomSystem(
            mu34=rf_dipole,
            probe_wavelength=probe_wavelength,
            atom_mass=atom_mass,
            **values,
        )
    except ValueError as e:
        raise ConfigError("atom.levels", str(e)) from None
    normalized["levels"] = {
        name: format_quantity(values[name], kind) for name, kind in kinds.items()
    }
    atom = AtomSection(probe_wavelength, rf_dipole, atom_mass, levels=system)
    return atom, normalized


def _parse_environment(section: Dict[str, Any]) -> Tuple[Environment, Dict]:
    _check_fields(section, "environment", SECTION_FIELDS["environment"])
    temperature = parse_quantity(
        _require(section, "temperature", "environment"),
        "environment.temperature",
        "temperature",
    )
    nodes = parse_count(
        section.get("doppler_nodes", 41), "environment.doppler_nodes", minimum=3
    )
    truncation = parse_number(
        section.get("doppler_truncation", 5.0), "environment.doppler_truncation"
    )
    method = section.get("doppler_method", "gauss-hermite")
    try:
        env = Environment(temperature, nodes, truncation, method)
    except ValueError as e:
        raise ConfigError("environment", str(e)) from None
    return env, {
        "temperature": format_quantity(temperature, "temperature"),
        "doppler_nodes": nodes,
        "doppler_truncation": truncation,
        "doppler_method": method,
    }


def _parse_direction(wave: Dict[str, Any], name: str) -> float:
    if "theta" in wave:
        theta = parse_number(wave["theta"], f"{name}.theta")
    else:
        angle = parse_quantity(wave.get("angle", "0 rad"), f"{name}.angle", "angle")
        theta = math.sin(angle)
    if abs(theta) > 1:
        raise ConfigError(f"{name}.theta", f"must lie in [-1, 1], got {theta}")
    return theta


def _parse_wave(
    wave: Any, name: str, angular_frequency: float
) -> Tuple[PlaneWave, Dict]:
    wave = _require_mapping(wave, name)
    _check_fields(wave, name, WAVE_FIELDS)
    strength = parse_quantity(
        _require(wave, "strength", name), f"{name}.strength", "field"
    )
    theta = _parse_direction(wave, name)
    phase = parse_quantity(wave.get("phase", "0 rad"), f"{name}.phase", "angle")
    try:
        plane = PlaneWave(strength, angular_frequency, theta, phase)
    except ValueError as e:
        raise ConfigError(name, str(e)) from None
    return plane, {
        "strength": format_quantity(strength, "field"),
        "theta": theta,
        "phase": format_quantity(phase, "angle"),
    }


def _parse_scene(
    section: Dict[str, Any], beat_frequency: float
) -> Tuple[FieldScene, Dict]:
    _check_fields(section, "scene", SECTION_FIELDS["scene"])
    lo_raw = _require_mapping(_require(section, "lo", "scene"), "scene.lo")
    if "angular_frequency" in lo_raw:
        omega_l = parse_quantity(
            lo_raw["angular_frequency"],
            "scene.lo.angular_frequency",
            "angular_frequency",
        )
    else:
        frequency = parse_quantity(
            _require(lo_raw, "frequency", "scene.lo"), "scene.lo.frequency", "frequency"
        )
        omega_l = 2.0 * math.pi * frequency
    lo, lo_norm = _parse_wave(lo_raw, "scene.lo", omega_l)
    lo_norm = {
        "angular_frequency": format_quantity(omega_l, "angular_frequency"),
        **lo_norm,
    }
    omega_s = omega_l + beat_frequency
    signal, signal_norm = _parse_wave(
        _require(section, "signal", "scene"), "scene.signal", omega_s
    )

    interferers, interferer_norm = [], []
    raw_interferers = section.get("interferers") or []
    if not isinstance(raw_interferers, list):
        raise ConfigError("scene.interferers", "expected a list")
    for index, raw in enumerate(raw_interferers):
        wave, norm = _parse_wave(raw, f"scene.interferers[{index}]", omega_s)
        interferers.append(wave)
        interferer_norm.append(norm)
    try:
        scene = FieldScene(lo, signal, tuple(interferers))
    except ValueError as e:
        raise ConfigError("scene", str(e)) from None
    return scene, {"lo": lo_norm, "signal": signal_norm, "interferers": interferer_norm}


def _cell_key(section: Dict[str, Any], name: str) -> str:
    """Return the spelling used for a cell field, the long name or its symbol."""
    symbol = _CELL_SYMBOLS[name]
    return symbol if symbol in section else name


def _parse_cell(section: Dict[str, Any]) -> Tuple[CellSection, Dict]:
    allowed = SECTION_FIELDS["cell"] + tuple(_CELL_SYMBOLS.values())
    _check_fields(section, "cell", allowed)
    kind = section.get("kind", "continuous")
    if kind not in ("continuous", "segmental"):
        raise ConfigError(
            "cell.kind", f"must be 'continuous' or 'segmental', got {kind!r}"
        )
    length_key = _cell_key(section, "length")
    length = parse_quantity(
        _require(section, length_key, "cell"), f"cell.{length_key}", "length"
    )
    if length <= 0:
        raise ConfigError(f"cell.{length_key}", "must be positive")
    segments_key = _cell_key(section, "segments")
    segments = parse_count(
        section.get(segments_key, 1), f"cell.{segments_key}", minimum=1
    )
    if kind == "continuous" and segments != 1:
        raise ConfigError(
            f"cell.{segments_key}", "a continuous cell has exactly one segment"
        )
    normalized: Dict[str, Any] = {
        "kind": kind,
        "length": format_quantity(length, "length"),
        "segments": segments,
    }
    pitch_key = _cell_key(section, "pitch")
    if pitch_key in section:
        pitch = parse_quantity(section[pitch_key], f"cell.{pitch_key}", "length")
        normalized["pitch"] = format_quantity(pitch, "length")
        return CellSection(kind, length, segments, pitch=pitch), normalized
    gap_key = _cell_key(section, "gap")
    gap = parse_quantity(section.get(gap_key, "0 m"), f"cell.{gap_key}", "length")
    if gap < 0:
        raise ConfigError(f"cell.{gap_key}", "must be non-negative")
    normalized["gap"] = format_quantity(gap, "length")
    return CellSection(kind, length, segments, gap=gap), normalized


def _parse_receiver(
    section: Dict[str, Any], probe_wavelength: float
) -> Tuple[ReceiverChain, Dict]:
    _check_fields(section, "receiver", SECTION_FIELDS["receiver"])
    power = parse_quantity(
        _require(section, "input_power", "receiver"), "receiver.input_power", "power"
    )
    eta = parse_number(
        _require(section, "quantum_efficiency", "receiver"),
        "receiver.quantum_efficiency",
    )
    try:
        chain = ReceiverChain(power, eta, probe_wavelength)
    except ValueError as e:
        raise ConfigError("receiver", str(e)) from None
    return chain, {
        "input_power": format_quantity(power, "power"),
        "quantum_efficiency": eta,
    }


def _parse_window(section: Dict[str, Any]) -> Tuple[MeasurementWindow, Dict]:
    _check_fields(section, "window", SECTION_FIELDS["window"])
    beat = parse_quantity(
        _require(section, "beat_frequency", "window"),
        "window.beat_frequency",
        "angular_frequency",
    )
    try:
        if "cycles" in section:
            cycles = parse_count(section["cycles"], "window.cycles", 1)
            window = MeasurementWindow.from_cycles(cycles, beat)
        else:
            duration = parse_quantity(
                _require(section, "duration", "window"), "window.duration", "time"
            )
            window = MeasurementWindow(duration, beat)
    except ValueError as e:
        raise ConfigError("window", str(e)) from None
    return window, {
        "duration": format_quantity(window.duration, "time"),
        "beat_frequency": format_quantity(beat, "angular_frequency"),
    }


def parse_config(text: str) -> RunConfig:
    """Parse a YAML configuration document into a RunConfig.

    Missing sections and fields fall back to DEFAULT_SETTINGS.

    Raises:
        ConfigError: naming section.field for missing, duplicate or mis-typed entries.
    """
    try:
        loaded = yaml.load(text, Loader=_UniqueKeyLoader) if text.strip() else {}
    except yaml.YAMLError as e:
        raise ConfigError("config", f"invalid YAML ({e})") from None
    user = _require_mapping(loaded or {}, "config")
    user = {key: value for key, value in user.items() if key != "derived"}
    for key in user:
        if key not in SECTION_FIELDS:
            raise ConfigError(key, "unknown section")
        _require_mapping(user[key], key)

    merged = _merge_with_defaults(DEFAULT_SETTINGS, user)
    environment, env_norm = _parse_environment(merged["environment"])
    atom, atom_norm = _parse_atom(merged["atom"])
    window, window_norm = _parse_window(merged["window"])
    scene, scene_norm = _parse_scene(merged["scene"], window.beat_frequency)
    cell, cell_norm = _parse_cell(merged["cell"])
    receiver, receiver_norm = _parse_receiver(merged["receiver"], atom.probe_wavelength)
    experiment = copy.deepcopy(merged["experiment"])

    normalized = {
        "atom": atom_norm,
        "environment": env_norm,
        "scene": scene_norm,
        "cell": cell_norm,
        "receiver": receiver_norm,
        "window": window_norm,
        "experiment": experiment,
    }
    logger.debug(f"Parsed configuration in {atom.mode} mode")
    return RunConfig(
        atom, environment, scene, cell, receiver, window, experiment, normalized
    )


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read and parse a configuration file; None selects the defaults table."""
    if path is None:
        logger.info("No configuration file given, using defaults")
        return parse_config("")
    text = Path(path).read_text(encoding="utf-8")
    logger.info(f"Configuration loaded from {path}")
    return parse_config(text)


def dump_config(config: RunConfig, include_derived: bool = True) -> str:
    """Normalized YAML for `config`, optionally with derived quantities appended."""
    document = dict(config.normalized)
    if include_derived:
        document["derived"] = config.derived()
    return yaml.safe_dump(document, sort_keys=False, allow_unicode=True)


def get_log_directory() -> Path:
    """Per-user directory for log files."""
    log_dir = Path(user_log_dir(APP_NAME, ORG_NAME))
    log_dir.mkdir(parents=True, exist_ok=True)
    return log_dir

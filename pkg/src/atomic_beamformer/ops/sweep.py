"""
Parameter sweeps over cell length, segment count, direction offset or LO direction.

Each grid value becomes one row; a row whose evaluation raises is kept with a
failed status and NaN values so the sweep always has one row per grid point.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.continuous import (
    ContinuousCell,
    MeasurementWindow,
    ReceiverChain,
    SnrReport,
    intrinsic_gain_continuous,
    snr_continuous,
    snr_long_cell,
    snr_short_cell,
)
from ..core.errors import BeamformerError, ConfigError
from ..core.fields import FieldScene
from ..core.segmental import (
    SegmentalCell,
    intrinsic_gain_segmental,
    snr_segmental,
    snr_segmental_long,
    snr_segmental_short,
)
from ..utils.units import parse_count, parse_number, parse_quantity

logger = logging.getLogger(__name__)

Cell = Union[ContinuousCell, SegmentalCell]

VARIABLE_COLUMNS = {
    "length": "L [m]",
    "segments": "M [1]",
    "offset": "theta_delta [1]",
    "lo_angle": "lo_angle [rad]",
}
REPORT_COLUMNS = (
    "P_s [A2 s]",
    "N_bbr [A2 s]",
    "N_psn [A2 s]",
    "snr_bbr [1]",
    "snr_psn [1]",
    "snr_total [1]",
    "snr_total [dB]",
    "G [1]",
    "hpbw [rad]",
    "snr_short [1]",
    "snr_long [1]",
    "status",
)


def intrinsic_gain(
    cell: Cell, chain: ReceiverChain, scene: FieldScene
) -> Tuple[float, float]:
    """Intrinsic gain and signal phase for either cell layout."""
    if isinstance(cell, SegmentalCell):
        return intrinsic_gain_segmental(cell, chain, scene)
    return intrinsic_gain_continuous(cell, chain, scene)


def evaluate(
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Exact SNR report for either cell layout."""
    if isinstance(cell, SegmentalCell):
        return snr_segmental(cell, chain, scene, window, radiance)
    return snr_continuous(cell, chain, scene, window, radiance)


def evaluate_asymptotes(
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> Tuple[SnrReport, SnrReport]:
    """Short- and long-cell asymptotic reports for either layout."""
    if isinstance(cell, SegmentalCell):
        return (
            snr_segmental_short(cell, chain, scene, window, radiance),
            snr_segmental_long(cell, chain, scene, window, radiance),
        )
    return (
        snr_short_cell(cell, chain, scene, window, radiance),
        snr_long_cell(cell, chain, scene, window, radiance),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Grid over one variable; everything else comes from the run configuration."""
    variable: str
    values: Tuple[float, ...]

    def __post_init__(self):
        if self.variable not in VARIABLE_COLUMNS:
            choices = ", ".join(VARIABLE_COLUMNS)
            raise ValueError(
                f"variable must be one of {choices}, got {self.variable!r}"
            )
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(values[:-1], values[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        object.__setattr__(self, "values", values)

    @property
    def columns(self) -> Tuple[str, ...]:
        return (VARIABLE_COLUMNS[self.variable],) + REPORT_COLUMNS

    @classmethod
    def from_settings(cls, section: Dict[str, Any], name: str) -> "SweepSpec":
        """Build a spec from an experiment sub-section.

        The grid is either a `values` list or `start`, `stop` and `points`.
        """
        variable = section.get("variable", "length")
        if variable not in VARIABLE_COLUMNS:
            raise ConfigError(
                f"{name}.variable", f"unknown sweep variable {variable!r}"
            )

        def convert(raw: Any, field: str) -> float:
            if variable == "length":
                return parse_quantity(raw, field, "length")
            if variable == "lo_angle":
                return parse_quantity(raw, field, "angle")
            if variable == "segments":
                return float(parse_count(raw, field, minimum=1))
            return parse_number(raw, field)

        if "values" in section:
            raw_values = section["values"]
            if not isinstance(raw_values, list):
                raise ConfigError(f"{name}.values", "expected a list")
            values = [
                convert(v, f"{name}.values[{i}]") for i, v in enumerate(raw_values)
            ]
        else:
            start = convert(section.get("start"), f"{name}.start")
            stop = convert(section.get("stop"), f"{name}.stop")
            points = parse_count(section.get("points", 2), f"{name}.points", minimum=1)
            spacing = section.get("spacing", "linear")
            if spacing == "log":
                values = np.geomspace(start, stop, points)
            else:
                values = np.linspace(start, stop, points)
            if variable == "segments":
                values = np.unique(np.round(values))
        try:
            return cls(variable, tuple(values))
        except ValueError as e:
            raise ConfigError(name, str(e)) from None


def _scene_for(scene: FieldScene, variable: str, value: float) -> FieldScene:
    if variable == "offset":
        signal = replace(scene.signal, theta=scene.lo.theta + value)
        return replace(scene, signal=signal)
    if variable == "lo_angle":
        return replace(scene, lo=replace(scene.lo, theta=math.sin(value)))
    return scene


def _failed_row(value: float, error: Exception) -> List[Any]:
    status = f"failed: {type(error).__name__}: {error}"
    return [value] + [math.nan] * (len(REPORT_COLUMNS) - 1) + [status]


def sweep_row(config, variable: str, value: float) -> List[Any]:
    """Evaluate one grid point of a sweep against a RunConfig."""
    try:
        if variable == "length":
            cell = config.build_cell(length=value)
        elif variable == "segments":
            cell = config.build_cell(segments=int(value))
        else:
            cell = config.build_cell()
        scene = _scene_for(config.scene, variable, value)
        args = (cell, config.receiver, scene, config.window, config.radiance)
        report = evaluate(*args)
        short, long = evaluate_asymptotes(*args)
    except (BeamformerError, ValueError) as e:
        logger.warning(f"Sweep row {variable}={value:.6g} failed: {e}")
        return _failed_row(value, e)

    snr_db = 10.0 * math.log10(report.snr_total) if report.snr_total > 0 else -math.inf
    logger.debug(f"Sweep row {variable}={value:.6g}: snr_total={snr_db:.3f} dB")
    return [
        value,
        report.signal_energy,
        report.bbr_density,
        report.psn_density,
        report.snr_bbr,
        report.snr_psn,
        report.snr_total,
        snr_db,
        report.pattern_gain,
        report.hpbw,
        short.snr_total,
        long.snr_total,
        "ok",
    ]


def run_sweep(spec: SweepSpec, config, threads: int = 1) -> pd.DataFrame:
    """Evaluate every grid point of `spec`; rows come back in grid order."""
    logger.info(
        f"Sweeping {spec.variable} over {len(spec.values)} points "
        f"with {threads} thread(s)"
    )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(
                executor.map(lambda v: sweep_row(config, spec.variable, v), spec.values)
            )
    else:
        rows = [sweep_row(config, spec.variable, v) for v in spec.values]
    frame = pd.DataFrame(rows, columns=list(spec.columns))
    failed = int((frame["status"] != "ok").sum())
    if failed:
        logger.warning(f"{failed} of {len(frame)} sweep rows failed")
    return frame


def peak_row(frame: pd.DataFrame, column: str = "snr_total [1]") -> Optional[pd.Series]:
    """Row with the largest value of `column`, ignoring failed rows."""
    valid = frame[frame["status"] == "ok"]
    if valid.empty:
        return None
    return valid.loc[valid[column].idxmax()]


def grid_values(frame: pd.DataFrame) -> Iterable[float]:
    return frame.iloc[:, 0].to_numpy()


def db(values: Sequence[float]) -> np.ndarray:
    return 10.0 * np.log10(np.asarray(values, dtype=float))

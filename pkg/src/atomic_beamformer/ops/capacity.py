"""
Monte-Carlo channel capacity under one randomly placed interferer.

The LO and the signal share a fixed direction; each trial draws the
interferer's direction uniformly over the front half-plane and its strength
uniformly up to a fraction of the signal strength. The interferer enters
through its own beat energy only, filtered by the reception pattern.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.continuous import MeasurementWindow, ReceiverChain, SnrReport
from ..core.errors import ConfigError
from ..core.fields import FieldScene, PlaneWave
from ..utils.units import parse_count, parse_number, parse_quantity
from .sweep import Cell, evaluate, intrinsic_gain

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = (
    "trial",
    "interferer_angle [rad]",
    "interferer_theta [1]",
    "interferer_strength [V/m]",
    "P_I [A2 s]",
    "capacity [bit]",
    "capacity_free [bit]",
)

GRID_COLUMNS = (
    "L [m]",
    "M [1]",
    "capacity_mean [bit]",
    "capacity_std [bit]",
    "capacity_free [bit]",
    "gap [bit]",
)


@dataclass(frozen=True)
class CapacityConfig:
    """Trial count, seed and interferer statistics of a capacity study.

    `snr_offset_db` raises the signal field so that the interference-free SNR
    moves by that many dB; interferer strengths follow the raised signal.
    """
    trials: int = 1000
    seed: int = 0
    strength_ratio: float = 0.5
    angle: float = math.pi / 4
    snr_offset_db: float = 0.0

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be an integer >= 1, got {self.trials}")
        if self.strength_ratio < 0:
            raise ValueError(
                f"strength_ratio must be non-negative, got {self.strength_ratio}"
            )
        if abs(self.angle) > math.pi / 2:
            raise ValueError(f"angle must lie in [-pi/2, pi/2], got {self.angle}")
        if not math.isfinite(self.snr_offset_db):
            raise ValueError(f"snr_offset_db must be finite, got {self.snr_offset_db}")

    @property
    def field_scale(self) -> float:
        """Factor on the signal field that shifts the SNR by snr_offset_db."""
        return 10.0 ** (self.snr_offset_db / 20.0)

    @classmethod
    def from_settings(
        cls, section: Dict[str, Any], seed: Optional[int] = None
    ) -> "CapacityConfig":
        """Build from the experiment.capacity section; `seed` overrides the file."""
        name = "experiment.capacity"
        if seed is None:
            seed = parse_count(section.get("seed", 0), f"{name}.seed")
        try:
            return cls(
                trials=parse_count(
                    section.get("trials", 1000), f"{name}.trials", minimum=1
                ),
                seed=seed,
                strength_ratio=parse_number(
                    section.get("strength_ratio", 0.5), f"{name}.strength_ratio"
                ),
                angle=parse_quantity(
                    section.get("angle", "45 deg"), f"{name}.angle", "angle"
                ),
                snr_offset_db=parse_number(
                    section.get("snr_offset_db", 0.0), f"{name}.snr_offset_db"
                ),
            )
        except ValueError as e:
            raise ConfigError(name, str(e)) from None


@dataclass(frozen=True)
class CapacityResult:
    """Per-trial capacities and their summary."""
    mean: float
    std: float
    capacity_free: float
    trials: pd.DataFrame

    @property
    def gap(self) -> float:
        """Capacity lost to interference, in bits."""
        return self.capacity_free - self.mean


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial; identical for a given (seed, trial)."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    return np.random.Generator(np.random.Philox(sequence))


def aligned_scene(scene: FieldScene, angle: float) -> FieldScene:
    """Scene with LO and signal both arriving from `angle` and no interferers."""
    theta = math.sin(angle)
    return replace(
        scene,
        lo=replace(scene.lo, theta=theta),
        signal=replace(scene.signal, theta=theta),
        interferers=(),
    )


def interference_energy(
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    interferer: PlaneWave,
) -> float:
    """Beat energy of one interferer, the signal formula at its direction."""
    signal = replace(
        scene.signal, theta=interferer.theta, strength=interferer.strength
    )
    seen = replace(scene, signal=signal)
    kappa, phase = intrinsic_gain(cell, chain, seen)
    return window.energy(kappa * interferer.strength, phase)


def capacity(report: SnrReport, interference: float = 0.0) -> float:
    """Shannon capacity in bits of one measurement."""
    noise = interference + report.bbr_density + report.psn_density
    if noise == 0:
        return math.inf
    return math.log2(1.0 + report.signal_energy / noise)


def _run_trial(
    trial: int,
    settings: CapacityConfig,
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    report: SnrReport,
) -> list:
    rng = trial_generator(settings.seed, trial)
    angle = rng.uniform(-math.pi / 2, math.pi / 2)
    strength = rng.uniform(0.0, settings.strength_ratio * scene.signal.strength)
    interferer = replace(scene.signal, theta=math.sin(angle), strength=strength)
    energy = interference_energy(cell, chain, scene, window, interferer)
    return [
        trial,
        angle,
        interferer.theta,
        strength,
        energy,
        capacity(report, energy),
        capacity(report),
    ]


def capacity_mc(
    settings: CapacityConfig,
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
    threads: int = 1,
) -> CapacityResult:
    """Average capacity over random interferers for one receiver geometry."""
    scene = aligned_scene(scene, settings.angle)
    if settings.snr_offset_db:
        strength = scene.signal.strength * settings.field_scale
        scene = replace(scene, signal=replace(scene.signal, strength=strength))
    report = evaluate(cell, chain, scene, window, radiance)

    def run(trial: int) -> list:
        return _run_trial(trial, settings, cell, chain, scene, window, report)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = list(executor.map(run, range(settings.trials)))
    else:
        rows = [run(trial) for trial in range(settings.trials)]

    frame = pd.DataFrame(rows, columns=list(TRIAL_COLUMNS))
    values = frame["capacity [bit]"].to_numpy()
    result = CapacityResult(
        mean=float(np.mean(values)),
        std=float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        capacity_free=capacity(report),
        trials=frame,
    )
    logger.info(
        f"Capacity over {settings.trials} trials: {result.mean:.4f} bit "
        f"(interference-free {result.capacity_free:.4f} bit)"
    )
    return result


def capacity_grid(
    settings: CapacityConfig,
    config,
    lengths: Sequence[float],
    segments: Iterable[int] = (1,),
    threads: int = 1,
) -> pd.DataFrame:
    """Capacity summary for every (length, segments) pair of a RunConfig."""
    rows = []
    for length in lengths:
        for count in segments:
            cell = config.build_cell(length=length, segments=int(count))
            result = capacity_mc(
                settings,
                cell,
                config.receiver,
                config.scene,
                config.window,
                config.radiance,
                threads=threads,
            )
            rows.append(
                [
                    length,
                    int(count),
                    result.mean,
                    result.std,
                    result.capacity_free,
                    result.gap,
                ]
            )
    return pd.DataFrame(rows, columns=list(GRID_COLUMNS))

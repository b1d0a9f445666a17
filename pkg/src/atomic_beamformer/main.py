"""
Command-line entry point for atomic-beamformer.

Each subcommand reads a run configuration, runs one experiment and writes a
CSV result table, optionally with an SVG figure next to it.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler

from .app_meta import APP_NAME, get_version_string
from .core.atom import LinearSusceptibility, susceptibility, susceptibility_slope
from .core.continuous import pattern_continuous
from .core.errors import BeamformerError, ConfigError
from .core.fields import theta_from_angle
from .core.segmental import SegmentalCell, pattern_components
from .data.results import ResultTable, render_svg
from .ops.capacity import CapacityConfig, capacity_grid, capacity_mc
from .ops.oracle import oracle_check
from .ops.sweep import SweepSpec, run_sweep
from .settings import RunConfig, dump_config, get_log_directory, load_config
from .utils.file_utils import svg_path_for
from .utils.units import parse_count, parse_number, parse_quantity

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "susceptibility",
    "pattern",
    "snr-sweep",
    "seg-sweep",
    "capacity",
    "oracle-check",
    "dump-config",
)
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_MODEL_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


def setup_logging(verbose: bool = False) -> Path:
    """Rich console handler on stderr plus a log file in the per-user log directory."""
    log_file = get_log_directory() / "atomic_beamformer.log"
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    console = RichHandler(
        console=Console(stderr=True), show_path=False, rich_tracebacks=False
    )
    root.setLevel(level)
    root.addHandler(file_handler)
    root.addHandler(console)
    logging.captureWarnings(True)
    return log_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description=(
            "Signal, noise and beam pattern experiments for Rydberg atomic receivers."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"{APP_NAME} {get_version_string()}"
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument(
        "--config", type=Path, default=None, help="YAML run configuration"
    )
    parser.add_argument("--out", type=Path, default=None, help="output CSV path")
    parser.add_argument("--svg", action="store_true", help="also write an SVG figure")
    parser.add_argument(
        "--seed", type=int, default=None, help="override the configured seed"
    )
    parser.add_argument(
        "--threads", type=int, default=1, help="worker threads for sweeps"
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def _section(config: RunConfig, name: str) -> Dict:
    section = config.experiment.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"experiment.{name}", "expected a mapping")
    return section


def _quantity_list(section: Dict, key: str, name: str, kind: str) -> List[float]:
    raw = section.get(key, [])
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{name}.{key}", "expected a non-empty list")
    return [parse_quantity(v, f"{name}.{key}[{i}]", kind) for i, v in enumerate(raw)]


def susceptibility_table(config: RunConfig) -> pd.DataFrame:
    """chi and its slope over a log-spaced Rabi grid around the LO operating point."""
    name = "experiment.susceptibility"
    section = _section(config, "susceptibility")
    points = parse_count(section.get("points", 201), f"{name}.points", minimum=2)
    span = section.get("span", [0.1, 10.0])
    if not isinstance(span, list) or len(span) != 2:
        raise ConfigError(f"{name}.span", "expected two multipliers")
    low, high = (parse_number(v, f"{name}.span") for v in span)
    if not 0 < low < high:
        raise ConfigError(f"{name}.span", f"expected 0 < low < high, got {span}")

    center = config.point.operating_rabi
    rabi = np.geomspace(low * center, high * center, points)
    if config.atom.levels is None:
        logger.info("Override mode: tabulating the linear susceptibility model")
        chi = LinearSusceptibility(config.point)(rabi)
        slope = np.full_like(rabi, config.point.chi_slope)
    else:
        system, env = config.atom.levels, config.environment
        chi = np.array([susceptibility(system, env, omega) for omega in rabi])
        slope = np.array([susceptibility_slope(system, env, omega) for omega in rabi])
    return pd.DataFrame({
        "rabi [rad/s]": rabi,
        "field [V/m]": rabi * config.scene.lo.strength / center,
        "chi [1/m]": chi,
        "chi_slope [s/(m rad)]": slope,
    })


def pattern_table(config: RunConfig) -> pd.DataFrame:
    """Reception pattern over the signal angle for every (LO angle, length) pair."""
    name = "experiment.pattern"
    section = _section(config, "pattern")
    lo_angles = _quantity_list(section, "lo_angles", name, "angle")
    lengths = _quantity_list(section, "lengths", name, "length")
    points = parse_count(section.get("points", 721), f"{name}.points", minimum=2)
    signal_angles = np.linspace(-math.pi / 2, math.pi / 2, points)
    lam = config.scene.wavelength

    frames = []
    for lo_angle in lo_angles:
        theta_delta = theta_from_angle(signal_angles) - theta_from_angle(lo_angle)
        for length in lengths:
            cell = config.build_cell(length=length)
            if isinstance(cell, SegmentalCell):
                element, array, gain = pattern_components(theta_delta, cell, lam)
            else:
                gain = pattern_continuous(theta_delta, cell.length, lam)
                element, array = gain, np.ones_like(gain)
            frames.append(pd.DataFrame({
                "lo_angle [deg]": math.degrees(lo_angle),
                "L [m]": length,
                "signal_angle [deg]": np.degrees(signal_angles),
                "theta_delta [1]": theta_delta,
                "G [1]": gain,
                "G_segment [1]": element,
                "G_array [1]": array,
            }))
    return pd.concat(frames, ignore_index=True)


def _pattern_svg(table: ResultTable, path: Path) -> None:
    frame = table.frame
    angles = frame["lo_angle [deg]"].map(lambda a: f"lo {a:g} deg")
    lengths = frame["L [m]"].map(lambda length: f", L {100 * length:g} cm")
    wide = frame.assign(series=angles + lengths).pivot(
        index="signal_angle [deg]", columns="series", values="G [1]"
    )
    wide = wide.reset_index()
    columns = [c for c in wide.columns if c != "signal_angle [deg]"]
    render_svg(
        ResultTable(table.name, wide),
        path,
        "signal_angle [deg]",
        columns,
        to_db=True,
        ylabel="G [dB]",
    )


def capacity_table(config: RunConfig, seed: Optional[int], threads: int):
    """Per-trial table for the configured cell, or an (L, M) summary grid."""
    section = _section(config, "capacity")
    settings = CapacityConfig.from_settings(section, seed=seed)
    if "lengths" in section:
        lengths = _quantity_list(section, "lengths", "experiment.capacity", "length")
        field = "experiment.capacity.segments"
        counts = section.get("segments", [config.cell.segments])
        if not isinstance(counts, list) or not counts:
            raise ConfigError(field, "expected a non-empty list")
        counts = [parse_count(c, field, minimum=1) for c in counts]
        offset = {"snr_offset_db": repr(settings.snr_offset_db)}
        grid = capacity_grid(settings, config, lengths, counts, threads)
        return grid, settings, offset
    result = capacity_mc(
        settings,
        config.build_cell(),
        config.receiver,
        config.scene,
        config.window,
        config.radiance,
        threads=threads,
    )
    summary = {
        "snr_offset_db": repr(settings.snr_offset_db),
        "capacity_mean": repr(result.mean),
        "capacity_std": repr(result.std),
        "capacity_free": repr(result.capacity_free),
    }
    return result.trials, settings, summary


def oracle_table(config: RunConfig, seed: Optional[int]):
    name = "experiment.oracle"
    section = _section(config, "oracle")
    if seed is None:
        seed = parse_count(section.get("seed", 0), f"{name}.seed")

    def count(key: str, default: int, minimum: int = 0) -> int:
        return parse_count(section.get(key, default), f"{name}.{key}", minimum=minimum)

    frame = oracle_check(
        config,
        trials=count("trials", 10000, minimum=2),
        seed=seed,
        grid_points=count("grid_points", 2000, minimum=16),
        amplitude_ratio=parse_number(
            section.get("amplitude_ratio", 1e-3), f"{name}.amplitude_ratio"
        ),
        points_per_wavelength=count("points_per_wavelength", 64),
        time_points=count("time_points", 64, minimum=4),
    )
    return frame, seed


def execute(
    subcommand: str,
    config: RunConfig,
    out: Path,
    svg: bool = False,
    seed: Optional[int] = None,
    threads: int = 1,
) -> ResultTable:
    """Run one experiment subcommand and write its result table."""
    figure: Optional[Callable[[ResultTable, Path], None]] = None
    extra: Dict[str, str] = {}
    used_seed: Optional[int] = None

    if subcommand == "susceptibility":
        frame = susceptibility_table(config)

        def figure(table, path):
            render_svg(
                table,
                path,
                "rabi [rad/s]",
                ["chi [1/m]"],
                logx=True,
                ylabel="chi [1/m]",
            )
    elif subcommand == "pattern":
        frame = pattern_table(config)
        figure = _pattern_svg
    elif subcommand in ("snr-sweep", "seg-sweep"):
        key = subcommand.replace("-", "_")
        spec = SweepSpec.from_settings(_section(config, key), f"experiment.{key}")
        frame = run_sweep(spec, config, threads=threads)
        x = frame.columns[0]

        def figure(table, path):
            render_svg(
                table,
                path,
                x,
                ["snr_total [1]", "snr_short [1]", "snr_long [1]"],
                logx=spec.variable in ("length", "segments"),
                to_db=True,
                ylabel="SNR [dB]",
            )
    elif subcommand == "capacity":
        frame, settings, extra = capacity_table(config, seed, threads)
        used_seed = settings.seed
        if "L [m]" in frame:
            def figure(table, path):
                render_svg(
                    table,
                    path,
                    "L [m]",
                    ["capacity_mean [bit]", "capacity_free [bit]"],
                    ylabel="capacity [bit]",
                )
        else:
            def figure(table, path):
                trials = table.frame.sort_values("interferer_angle [rad]")
                render_svg(
                    ResultTable(table.name, trials),
                    path,
                    "interferer_angle [rad]",
                    ["capacity [bit]"],
                    ylabel="capacity [bit]",
                )
    elif subcommand == "oracle-check":
        frame, used_seed = oracle_table(config, seed)
    else:
        raise ValueError(f"unknown subcommand {subcommand!r}")

    table = ResultTable.for_run(
        subcommand, frame, config.config_hash, used_seed, **extra
    )
    table.write(out)
    if svg and figure is not None:
        figure(table, svg_path_for(out))
    return table


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the subcommand and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        log_file = setup_logging(args.verbose)
    except OSError as e:
        print(f"error: cannot open log file: {e}", file=sys.stderr)
        return EXIT_IO_ERROR

    logger.info(f"Starting {APP_NAME} v{get_version_string()}")
    logger.info(f"Log file: {log_file}")
    logger.info(f"Configuration: {args.config or 'defaults'}")
    try:
        if args.threads < 1:
            raise ConfigError("--threads", f"must be >= 1, got {args.threads}")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed", f"must be non-negative, got {args.seed}")
        config = load_config(args.config)
        if args.subcommand == "dump-config":
            text = dump_config(config)
            if args.out is None:
                sys.stdout.write(text)
            else:
                args.out.parent.mkdir(parents=True, exist_ok=True)
                args.out.write_text(text, encoding="utf-8")
            return EXIT_OK
        out = args.out or Path(f"{args.subcommand}.csv")
        logger.info(f"Output: {out}")
        execute(
            args.subcommand,
            config,
            out,
            svg=args.svg,
            seed=args.seed,
            threads=args.threads,
        )
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (BeamformerError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_MODEL_ERROR
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR
    return EXIT_OK


def main():
    """Main entry point for the command-line tool."""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()

"""
Brute-force references for the closed-form receiver model.

The photocurrent oracle integrates the Beer-Lambert exponent of the full
field magnitude along the cell instead of linearizing it; the remaining
helpers integrate the signal and noise terms numerically. None of this is
used for headline numbers, only to check the closed forms.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import constants
from scipy.integrate import simpson

from ..core.atom import LinearSusceptibility, SusceptibilityCurve
from ..core.continuous import (
    ContinuousCell,
    ReceiverChain,
    bbr_noise_density_continuous,
    xi,
    xi_closed_form,
)
from ..core.errors import ResolutionTooCoarse
from ..core.fields import BbrSampler, FieldScene, rabi_signal
from ..core.segmental import (
    SegmentalCell,
    bbr_noise_density_segmental,
    pattern_segmental,
)
from .sweep import intrinsic_gain

logger = logging.getLogger(__name__)

Cell = Union[ContinuousCell, SegmentalCell]

MIN_POINTS_PER_WAVELENGTH = 64
_TRIAL_CHUNK = 1000


def occupied_intervals(cell: Cell) -> np.ndarray:
    """(n, 2) array of the cell stretches that hold vapor."""
    if isinstance(cell, SegmentalCell):
        return cell.segment_bounds()
    return np.array([[0.0, cell.length]])


def oracle_grid(
    cell: Cell, wavelength: float, points_per_wavelength: int = 64
) -> List[np.ndarray]:
    """Uniform grid per occupied interval with at least the requested density.

    Raises:
        ResolutionTooCoarse: below 64 points per wavelength.
    """
    if points_per_wavelength < MIN_POINTS_PER_WAVELENGTH:
        raise ResolutionTooCoarse(
            f"{points_per_wavelength} points per wavelength is below "
            f"{MIN_POINTS_PER_WAVELENGTH}"
        )
    grids = []
    for start, end in occupied_intervals(cell):
        wavelengths = (end - start) / wavelength
        intervals = max(2, math.ceil(wavelengths * points_per_wavelength))
        if intervals % 2:
            intervals += 1
        grids.append(np.linspace(start, end, intervals + 1))
    return grids


def chi_model_for(config) -> Callable:
    """Susceptibility model used by the oracle for a RunConfig."""
    if config.atom.levels is None:
        return LinearSusceptibility(config.point)
    return SusceptibilityCurve.build(
        config.atom.levels, config.environment, config.point.operating_rabi
    )


def photocurrent_oracle(
    t,
    scene: FieldScene,
    cell: Cell,
    chain: ReceiverChain,
    chi_model: Callable,
    noise: Optional[Sequence[np.ndarray]] = None,
    points_per_wavelength: int = 64,
) -> np.ndarray:
    """Probe photocurrent from the full field magnitude, no linearization.

    `noise` holds one complex BBR field sample per occupied interval, laid out
    on the matching oracle_grid arrays; None switches the noise off.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    grids = oracle_grid(cell, scene.wavelength, points_per_wavelength)
    if noise is not None and len(noise) != len(grids):
        raise ValueError(f"expected {len(grids)} noise blocks, got {len(noise)}")

    point = cell.point
    coupling = point.dipole_moment / constants.hbar
    exponent = np.zeros_like(t)
    for index, z in enumerate(grids):
        signal = rabi_signal(scene, point.dipole_moment, t[:, None], z[None, :])
        rabi = point.operating_rabi + signal
        if noise is not None:
            block = np.asarray(noise[index])
            if block.shape != z.shape:
                raise ValueError(
                    f"noise block {index} has shape {block.shape}, expected {z.shape}"
                )
            steering = np.exp(1j * scene.wavenumber * z * scene.lo.theta)
            rabi = rabi + coupling * block * steering
        chi = chi_model(np.abs(rabi))
        exponent += simpson(chi, x=z, axis=-1)
    return chain.input_current * np.exp(-exponent)


def linearized_signal_current(
    t, cell: Cell, chain: ReceiverChain, scene: FieldScene
) -> np.ndarray:
    """First-order beat current -kappa E_s cos(omega_delta t + phase)."""
    kappa, phase = intrinsic_gain(cell, chain, scene)
    t = np.asarray(t, dtype=float)
    return -kappa * scene.signal.strength * np.cos(scene.beat_frequency * t + phase)


def linearization_error(
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    chi_model: Callable,
    amplitude_ratio: float = 1e-3,
    time_points: int = 64,
    points_per_wavelength: int = 64,
) -> Tuple[float, float]:
    """Relative error of the first-order beat current against the oracle.

    The signal is rescaled to amplitude_ratio * E_l and the oracle current is
    taken over one beat period with its mean removed. The error is the peak
    deviation relative to the peak first-order current, so it grows with the
    second-order terms. Returns (error, peak oracle beat current).
    """
    signal = replace(scene.signal, strength=amplitude_ratio * scene.lo.strength)
    scene = replace(scene, signal=signal)
    period = 2.0 * math.pi / abs(scene.beat_frequency)
    t = np.arange(time_points) * period / time_points
    current = photocurrent_oracle(
        t, scene, cell, chain, chi_model, points_per_wavelength=points_per_wavelength
    )
    beat = current - np.mean(current)
    linear = linearized_signal_current(t, cell, chain, scene)
    error = float(np.max(np.abs(beat - linear)) / np.max(np.abs(linear)))
    logger.debug(f"Linearization error {error:.3g} at E_s/E_l = {amplitude_ratio:g}")
    return error, float(np.max(np.abs(beat)))


def brute_force_overlap(
    cell: Cell, wavelength: float, theta_delta: float, points: int = 100001
) -> complex:
    """Integral of exp(-j 2 pi z theta_delta / wavelength) over the vapor."""
    intervals = occupied_intervals(cell)
    per_interval = max(3, points // len(intervals))
    if per_interval % 2 == 0:
        per_interval += 1
    total = 0.0 + 0.0j
    for start, end in intervals:
        z = np.linspace(start, end, per_interval)
        total += simpson(np.exp(-2j * math.pi * z * theta_delta / wavelength), x=z)
    return complex(total)


def brute_force_gain(
    cell: Cell, chain: ReceiverChain, scene: FieldScene, points: int = 100001
) -> complex:
    """kappa*exp(j phase) from direct integration of the signal term along the cell."""
    slope = chain.input_current * cell.transmission * cell.point.field_slope
    offset = scene.direction_offset
    overlap = brute_force_overlap(cell, scene.wavelength, offset, points)
    return slope * overlap * np.exp(1j * scene.phase_offset)


def brute_force_pattern(
    theta_delta: float, cell: Cell, wavelength: float, points: int = 100001
) -> float:
    overlap = brute_force_overlap(cell, wavelength, theta_delta, points)
    return abs(overlap) ** 2 / cell.length**2


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample estimate of the BBR current variance."""
    density: float
    standard_error: float
    trials: int


def bbr_density_monte_carlo(
    cell: Cell,
    chain: ReceiverChain,
    scene: FieldScene,
    radiance: float,
    trials: int = 10000,
    seed: int = 0,
    grid_points: int = 2000,
) -> MonteCarloEstimate:
    """Variance of the first-order BBR current over sampled noise fields.

    Each occupied stretch gets its own sampler; draws in different segments
    are independent.
    """
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    intervals = occupied_intervals(cell)
    per_interval = max(16, grid_points // len(intervals))
    slope = chain.input_current * cell.transmission * cell.point.field_slope
    rng = np.random.default_rng(seed)

    blocks = []
    for start, end in intervals:
        z = np.linspace(start, end, per_interval)
        weights = np.full(z.size, z[1] - z[0])
        weights[[0, -1]] *= 0.5
        steering = weights * np.exp(1j * scene.wavenumber * z * scene.lo.theta)
        blocks.append((BbrSampler(z, scene.wavelength, radiance), steering))

    currents = np.zeros(trials)
    for first in range(0, trials, _TRIAL_CHUNK):
        size = min(_TRIAL_CHUNK, trials - first)
        for sampler, steering in blocks:
            field = sampler.draw_complex(rng, size)
            currents[first:first + size] -= slope * np.real(field @ steering)

    squares = currents**2
    density = float(np.mean(squares))
    error = float(np.std(squares, ddof=1) / math.sqrt(trials))
    logger.info(
        f"Monte-Carlo BBR density {density:.6g} +/- {error:.2g} over {trials} trials"
    )
    return MonteCarloEstimate(density, error, trials)


def _check_row(
    check: str,
    geometry: str,
    closed_form: float,
    oracle: float,
    tolerance: float,
    error: Optional[float] = None,
) -> dict:
    if error is None and closed_form != 0:
        error = abs(oracle - closed_form) / abs(closed_form)
    elif error is None:
        error = abs(oracle)
    passed = bool(error <= tolerance) if math.isfinite(tolerance) else True
    if not passed:
        logger.warning(
            f"Oracle check {check} ({geometry}) off by {error:.3g} > {tolerance:g}"
        )
    return {
        "check": check,
        "geometry": geometry,
        "closed_form": closed_form,
        "oracle": oracle,
        "rel_error": error,
        "tolerance": tolerance,
        "passed": passed,
    }


def canonical_cells(config) -> Tuple[ContinuousCell, SegmentalCell, SegmentalCell]:
    """Continuous cell, 8-segment array with 1 cm gaps and 4 x 1 cm noise cell."""
    point = config.point
    continuous = ContinuousCell(config.cell.length, point)
    array = SegmentalCell(config.cell.length, 8, 0.01, point)
    noise_cell = SegmentalCell(0.04, 4, 0.01, point)
    return continuous, array, noise_cell


def oracle_check(
    config,
    trials: int = 10000,
    seed: int = 0,
    grid_points: int = 2000,
    amplitude_ratio: float = 1e-3,
    points_per_wavelength: int = 64,
    time_points: int = 64,
) -> pd.DataFrame:
    """Run every closed-form versus brute-force comparison on canonical cells."""
    chain, scene, radiance = config.receiver, config.scene, config.radiance
    continuous, array, noise_cell = canonical_cells(config)
    chi_model = chi_model_for(config)
    lam = scene.wavelength
    theta_l = scene.lo.theta
    rows = []

    for name, cell in (("continuous", continuous), ("segmental", array)):
        kappa, phase = intrinsic_gain(cell, chain, scene)
        closed = kappa * np.exp(1j * phase)
        direct = brute_force_gain(cell, chain, scene)
        error = abs(direct - closed) / abs(closed)
        rows.append(
            _check_row(
                "intrinsic_gain", name, abs(closed), abs(direct), 1e-6, error=error
            )
        )

        error, amplitude = linearization_error(
            cell,
            chain,
            scene,
            chi_model,
            amplitude_ratio,
            time_points,
            points_per_wavelength,
        )
        linear = abs(kappa) * amplitude_ratio * scene.lo.strength
        rows.append(
            _check_row("linearization", name, linear, amplitude, 0.01, error=error)
        )

    estimate = bbr_density_monte_carlo(
        continuous, chain, scene, radiance, trials, seed, grid_points
    )
    closed = bbr_noise_density_continuous(continuous, chain, lam, theta_l, radiance)
    rows.append(
        _check_row("bbr_monte_carlo", "continuous", closed, estimate.density, 0.05)
    )

    estimate = bbr_density_monte_carlo(
        noise_cell, chain, scene, radiance, trials, seed + 1, grid_points
    )
    closed = bbr_noise_density_segmental(noise_cell, chain, lam, theta_l, radiance)
    rows.append(
        _check_row("bbr_monte_carlo", "segmental", closed, estimate.density, 0.05)
    )

    d = continuous.length / lam
    rows.append(
        _check_row(
            "xi_closed_form",
            "continuous",
            xi(d, theta_l),
            xi_closed_form(d, theta_l),
            1e-8,
        )
    )

    theta = 0.05 * lam / array.pitch
    rows.append(
        _check_row(
            "pattern",
            "segmental",
            float(pattern_segmental(theta, array, lam)),
            brute_force_pattern(theta, array, lam),
            1e-9,
        )
    )

    correlated = bbr_noise_density_segmental(
        array, chain, lam, theta_l, radiance, correlated=True
    )
    independent = bbr_noise_density_segmental(array, chain, lam, theta_l, radiance)
    rows.append(
        _check_row(
            "segment_correlation", "segmental", independent, correlated, math.inf
        )
    )

    frame = pd.DataFrame(rows)
    logger.info(f"Oracle checks: {int(frame['passed'].sum())} of {len(frame)} passed")
    return frame

"""
Segmental vapor cell: M equal segments of total length L separated by gaps.

The reception pattern factors into the single-segment sinc pattern and the
Dirichlet array factor of the segment positions. BBR fields in different
segments are taken as uncorrelated unless the correlated diagnostic is asked
for.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import constants
from scipy.integrate import quad

from .atom import SusceptibilityPoint
from .continuous import (
    HPBW_FACTOR,
    VISIBLE_LIMIT,
    ContinuousCell,
    MeasurementWindow,
    ReceiverChain,
    SnrReport,
    _bbr_prefactor,
    _hpbw_or_nan,
    _ratio,
    atomic_aperture,
    half_power_width,
    regime_snrs_long,
    signal_energy,
    xi,
)
from .errors import HpbwUndefined
from .fields import FieldScene

logger = logging.getLogger(__name__)

_SERIES_RADIUS = 1e-7


@dataclass(frozen=True)
class SegmentalCell:
    """M segments of length L/M placed at pitch L/M + gap."""
    length: float
    segments: int
    gap: float
    point: SusceptibilityPoint

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if int(self.segments) != self.segments or self.segments < 1:
            raise ValueError(f"segments must be an integer >= 1, got {self.segments}")
        if self.gap < 0:
            raise ValueError(f"gap must be non-negative, got {self.gap}")
        object.__setattr__(self, "segments", int(self.segments))

    @classmethod
    def with_pitch(
        cls, length: float, segments: int, pitch: float, point: SusceptibilityPoint
    ) -> "SegmentalCell":
        gap = pitch - length / segments
        if gap < 0:
            if gap > -1e-12 * pitch:
                gap = 0.0
            else:
                raise ValueError(
                    f"pitch {pitch} is shorter than the segment length "
                    f"{length / segments}"
                )
        return cls(length, segments, gap, point)

    @property
    def segment_length(self) -> float:
        return self.length / self.segments

    @property
    def pitch(self) -> float:
        return self.segment_length + self.gap

    @property
    def effective_length(self) -> float:
        return self.length + (self.segments - 1) * self.gap

    @property
    def transmission(self) -> float:
        return math.exp(-self.point.chi * self.length)

    def segment_bounds(self) -> np.ndarray:
        """(M, 2) array of segment start and end positions along the cell axis."""
        starts = np.arange(self.segments) * self.pitch
        return np.column_stack([starts, starts + self.segment_length])

    def as_continuous(self) -> ContinuousCell:
        return ContinuousCell(self.length, self.point)


def dirichlet(segments: int, x):
    """Normalized array factor sin(M pi x) / (M sin(pi x)), continuous at integers."""
    if segments < 1:
        raise ValueError(f"segments must be >= 1, got {segments}")
    x = np.asarray(x, dtype=float)
    if segments == 1:
        return np.ones_like(x) if x.ndim else 1.0

    nearest = np.round(x)
    offset = x - nearest
    sign = np.where(np.mod(nearest * (segments - 1), 2) == 0, 1.0, -1.0)
    near = np.abs(offset) < _SERIES_RADIUS
    safe = np.where(near, 0.5, offset)
    direct = np.sin(segments * np.pi * safe) / (segments * np.sin(np.pi * safe))
    series = 1.0 - (segments**2 - 1) * (np.pi * offset) ** 2 / 6.0
    value = sign * np.where(near, series, direct)
    return float(value) if value.ndim == 0 else value


def pattern_components(theta_delta, cell: SegmentalCell, wavelength: float):
    """Single-segment pattern, array factor and their product."""
    theta_delta = np.asarray(theta_delta, dtype=float)
    element = np.sinc(cell.segment_length * theta_delta / wavelength) ** 2
    array = dirichlet(cell.segments, cell.pitch * theta_delta / wavelength) ** 2
    return element, array, element * array


def pattern_segmental(theta_delta, cell: SegmentalCell, wavelength: float):
    """Reception pattern of the segment array, 1 on the beam."""
    return pattern_components(theta_delta, cell, wavelength)[2]


def hpbw_segmental(
    cell: SegmentalCell, wavelength: float, method: str = "analytic"
) -> float:
    """Half-power beamwidth in theta-space (rad) of the segment array.

    Raises:
        HpbwUndefined: when the half-power point lies beyond |theta_delta| = 2.
    """
    if method == "numeric":
        return half_power_width(lambda t: pattern_segmental(t, cell, wavelength))
    width = HPBW_FACTOR * wavelength / (cell.segments * cell.pitch)
    if 0.5 * width > VISIBLE_LIMIT:
        raise HpbwUndefined(
            f"half-power point {0.5 * width:.4g} lies outside the visible region"
        )
    return width


def intrinsic_gain_segmental(
    cell: SegmentalCell, chain: ReceiverChain, scene: FieldScene
) -> Tuple[float, float]:
    """Intrinsic gain (A m/V) and signal phase of the segment array."""
    lam = scene.wavelength
    theta = scene.direction_offset
    element = np.sinc(cell.segment_length * theta / lam)
    array = dirichlet(cell.segments, cell.pitch * theta / lam)
    amplitude = chain.input_current * cell.transmission * cell.length
    kappa = amplitude * element * array * cell.point.field_slope
    phase = (
        scene.phase_offset
        - math.pi * cell.segment_length * theta / lam
        - math.pi * (cell.segments - 1) * cell.pitch * theta / lam
    )
    return float(kappa), phase


def _lagged_correlation(d: float, lag: float, theta_l: float) -> float:
    """Integral of (d - |v - lag|)_+ sinc(2v) cos(2 pi theta_l v) over v."""

    def integrand(v: float) -> float:
        weight = (d - abs(v - lag)) * np.sinc(2.0 * v)
        return weight * math.cos(2.0 * math.pi * theta_l * v)

    lower, upper = lag - d, lag + d
    edges = np.unique(np.concatenate([
        [lower, lag, upper],
        np.arange(math.ceil(2.0 * lower) / 2.0, upper, 0.5),
    ]))
    edges = edges[(edges >= lower) & (edges <= upper)]
    tolerance = 1e-10 * max(d * d, 0.5 * d) / max(edges.size - 1, 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            value, _ = quad(integrand, a, b, epsabs=tolerance, epsrel=1e-13, limit=200)
            total += value
    return total


def correlated_xi(cell: SegmentalCell, wavelength: float, theta_l: float) -> float:
    """BBR correlation integral over the union of all segments, cross terms included."""
    d = cell.segment_length / wavelength
    pitch = cell.pitch / wavelength
    total = cell.segments * xi(d, theta_l)
    for lag in range(1, cell.segments):
        cross = _lagged_correlation(d, lag * pitch, theta_l)
        total += 2.0 * (cell.segments - lag) * cross
    return total


def bbr_noise_density_segmental(
    cell: SegmentalCell,
    chain: ReceiverChain,
    wavelength: float,
    theta_l: float,
    radiance: float,
    correlated: bool = False,
) -> float:
    """BBR noise density of the segment array.

    With correlated=True the field correlation between segments is kept; this
    diagnostic quantifies the error of treating the segments as independent.
    """
    if correlated:
        weight = correlated_xi(cell, wavelength, theta_l)
    else:
        weight = cell.segments * xi(cell.segment_length / wavelength, theta_l)
    prefactor = _bbr_prefactor(
        cell.point, chain, cell.transmission, wavelength, radiance
    )
    return prefactor * weight


def psn_density_segmental(chain: ReceiverChain, cell: SegmentalCell) -> float:
    return constants.e * chain.dc_current(cell.length, cell.point.chi)


def _segmental_report(
    cell: SegmentalCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    bbr_density: float,
) -> SnrReport:
    kappa, phase = intrinsic_gain_segmental(cell, chain, scene)
    return SnrReport.from_energies(
        signal_energy=signal_energy(kappa, scene.signal.strength, window, phase),
        bbr_density=bbr_density,
        psn_density=psn_density_segmental(chain, cell),
        pattern_gain=float(
            pattern_segmental(scene.direction_offset, cell, scene.wavelength)
        ),
        intrinsic_gain=kappa,
        signal_phase=phase,
        hpbw=_hpbw_or_nan(lambda: hpbw_segmental(cell, scene.wavelength)),
    )


def snr_segmental(
    cell: SegmentalCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Exact first-order SNR of the segment array."""
    density = bbr_noise_density_segmental(
        cell, chain, scene.wavelength, scene.lo.theta, radiance
    )
    return _segmental_report(cell, chain, scene, window, density)


def snr_segmental_short(
    cell: SegmentalCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Asymptote for segments much shorter than the wavelength."""
    prefactor = _bbr_prefactor(
        cell.point, chain, cell.transmission, scene.wavelength, radiance
    )
    density = prefactor * cell.segments * (cell.segment_length / scene.wavelength) ** 2
    return _segmental_report(cell, chain, scene, window, density)


def snr_segmental_long(
    cell: SegmentalCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Asymptote for segments much longer than the wavelength."""
    prefactor = _bbr_prefactor(
        cell.point, chain, cell.transmission, scene.wavelength, radiance
    )
    density = prefactor * 0.5 * cell.length / scene.wavelength
    return _segmental_report(cell, chain, scene, window, density)


def regime_snrs_segmental(
    cell: SegmentalCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
    regime: str = "short",
) -> Tuple[float, float]:
    """BBR- and PSN-limited SNRs of an aligned segment array in the given regime."""
    if regime == "long":
        return regime_snrs_long(cell.as_continuous(), chain, scene, window, radiance)
    if regime != "short":
        raise ValueError(f"regime must be 'short' or 'long', got {regime!r}")
    es2t = scene.signal.strength**2 * window.duration
    snr_bbr = _ratio(cell.segments * es2t, radiance)
    aperture = atomic_aperture(cell.length, cell.point.chi)
    snr_psn = _ratio(aperture * es2t, chain.psn_constant(cell.point))
    return snr_bbr, snr_psn

"""
Signal, noise and SNR of a continuous vapor cell.

A cell of length L read out through a probe laser acts as a continuous phased
array whose phase profile comes from the LO field. This module carries the
closed forms for the intrinsic gain, the BBR and photon-shot-noise densities,
the resulting SNR, its short- and long-cell asymptotes, the atomic aperture and
the reception pattern.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Tuple

import numpy as np
from scipy import constants
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar
from scipy.special import sici

from .atom import SusceptibilityPoint
from .errors import HpbwUndefined, WindowMisaligned, warn
from .fields import FieldScene

logger = logging.getLogger(__name__)

HPBW_FACTOR = 0.886
VISIBLE_LIMIT = 2.0
# Extent, in LO wavelengths, of the cell that stands in for a point receiver.
POINT_RECEIVER_LENGTH = 1e-6


@dataclass(frozen=True)
class ContinuousCell:
    """A single vapor cell of length `length` (m) at a linearized operating point."""
    length: float
    point: SusceptibilityPoint

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def transmission(self) -> float:
        """Probe amplitude transmission exp(-chi_l L)."""
        return math.exp(-self.point.chi * self.length)


@dataclass(frozen=True)
class ReceiverChain:
    """Photodetector side of the receiver."""
    input_power: float
    quantum_efficiency: float
    probe_wavelength: float

    def __post_init__(self):
        if self.input_power <= 0:
            raise ValueError(f"input_power must be positive, got {self.input_power}")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError(
                f"quantum_efficiency must lie in (0, 1], got {self.quantum_efficiency}"
            )
        if self.probe_wavelength <= 0:
            raise ValueError(
                f"probe_wavelength must be positive, got {self.probe_wavelength}"
            )

    @property
    def probe_angular_frequency(self) -> float:
        return 2.0 * math.pi * constants.c / self.probe_wavelength

    @property
    def input_current(self) -> float:
        """Photocurrent of the unattenuated probe, q*eta*P_in/(hbar*omega_p)."""
        charge = constants.e * self.quantum_efficiency * self.input_power
        return charge / (constants.hbar * self.probe_angular_frequency)

    def dc_current(self, length: float, chi: float) -> float:
        return self.input_current * math.exp(-chi * length)

    def psn_constant(self, point: SusceptibilityPoint) -> float:
        """Relative photon-shot-noise strength beta_l in V^2 m^-2 s."""
        slope = point.field_slope
        if slope == 0:
            return math.inf
        return 2.0 * constants.e / (self.input_current * slope**2)


@dataclass(frozen=True)
class MeasurementWindow:
    """Integration window of the beat note.

    Durations within 1% of a whole number of beat periods are snapped onto it;
    beyond that a WindowMisaligned warning is issued and energies use the exact
    integral over the given duration.
    """
    duration: float
    beat_frequency: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.beat_frequency == 0:
            raise ValueError("beat_frequency must be nonzero")
        aligned = 2.0 * math.pi * self.cycles / abs(self.beat_frequency)
        mismatch = abs(self.duration - aligned) / aligned
        if mismatch <= 0.01:
            object.__setattr__(self, "duration", aligned)
        else:
            warn(
                WindowMisaligned,
                f"window {self.duration:.6g} s is {mismatch:.2%} away from "
                f"{self.cycles} beat periods",
            )

    @classmethod
    def from_cycles(cls, cycles: int, beat_frequency: float) -> "MeasurementWindow":
        if cycles < 1:
            raise ValueError(f"cycles must be >= 1, got {cycles}")
        return cls(2.0 * math.pi * cycles / abs(beat_frequency), beat_frequency)

    @property
    def cycles(self) -> int:
        return max(1, round(self.duration * abs(self.beat_frequency) / (2.0 * math.pi)))

    @property
    def bandwidth(self) -> float:
        return 1.0 / self.duration

    @property
    def is_aligned(self) -> bool:
        aligned = 2.0 * math.pi * self.cycles / abs(self.beat_frequency)
        return self.duration == aligned

    def energy(self, amplitude: float, phase: float = 0.0) -> float:
        """Integral of (amplitude*cos(omega*t + phase))^2 over the window."""
        if self.is_aligned:
            return 0.5 * amplitude**2 * self.duration
        w, t = self.beat_frequency, self.duration
        ripple = math.sin(2.0 * (w * t + phase)) - math.sin(2.0 * phase)
        return amplitude**2 * (0.5 * t + ripple / (4.0 * w))


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return math.inf if numerator > 0 else 0.0
    return numerator / denominator


@dataclass(frozen=True)
class SnrReport:
    """Signal energy, noise densities and the SNRs derived from them."""
    signal_energy: float
    bbr_density: float
    psn_density: float
    snr_bbr: float
    snr_psn: float
    snr_total: float
    pattern_gain: float
    intrinsic_gain: float
    signal_phase: float
    hpbw: float = math.nan

    @classmethod
    def from_energies(
        cls,
        signal_energy: float,
        bbr_density: float,
        psn_density: float,
        pattern_gain: float,
        intrinsic_gain: float,
        signal_phase: float,
        hpbw: float = math.nan,
    ) -> "SnrReport":
        return cls(
            signal_energy=signal_energy,
            bbr_density=bbr_density,
            psn_density=psn_density,
            snr_bbr=_ratio(signal_energy, bbr_density),
            snr_psn=_ratio(signal_energy, psn_density),
            snr_total=_ratio(signal_energy, bbr_density + psn_density),
            pattern_gain=pattern_gain,
            intrinsic_gain=intrinsic_gain,
            signal_phase=signal_phase,
            hpbw=hpbw,
        )

    @property
    def snr_harmonic(self) -> float:
        """Total SNR recombined from the two regime SNRs."""
        if math.isinf(self.snr_bbr):
            return self.snr_psn
        if math.isinf(self.snr_psn):
            return self.snr_bbr
        return _ratio(self.snr_bbr * self.snr_psn, self.snr_bbr + self.snr_psn)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def xi(d: float, theta_l: float) -> float:
    """BBR correlation integral over a cell of d wavelengths seen from theta_l.

    The integrand (d - |u|) sinc(2u) cos(2 pi theta_l u) is even, so the
    integral is folded onto [0, d] and split at every half unit.
    """
    if d < 0:
        raise ValueError(f"d must be non-negative, got {d}")
    if abs(theta_l) > 1:
        raise ValueError(f"theta_l must lie in [-1, 1], got {theta_l}")
    if d == 0:
        return 0.0

    def integrand(u: float) -> float:
        return (d - u) * np.sinc(2.0 * u) * math.cos(2.0 * math.pi * theta_l * u)

    edges = np.append(np.arange(0.0, d, 0.5), d)
    tolerance = 1e-10 * max(d * d, 0.5 * d) / (2.0 * (edges.size - 1))
    total = 0.0
    for lower, upper in zip(edges[:-1], edges[1:]):
        if upper > lower:
            value, _ = quad(
                integrand, lower, upper, epsabs=tolerance, epsrel=1e-13, limit=200
            )
            total += value
    return 2.0 * total


def xi_closed_form(d: float, theta_l: float) -> float:
    """Sine-integral evaluation of xi, used to cross-check the quadrature."""
    total = 0.0
    for rate in (2.0 * math.pi * (1.0 + theta_l), 2.0 * math.pi * (1.0 - theta_l)):
        if rate == 0:
            continue
        si, _ = sici(rate * d)
        total += d * si - (1.0 - math.cos(rate * d)) / rate
    return total / (2.0 * math.pi)


def intrinsic_gain_continuous(
    cell: ContinuousCell, chain: ReceiverChain, scene: FieldScene
) -> Tuple[float, float]:
    """Intrinsic gain kappa (A m/V) and signal phase of the beat current."""
    x = cell.length * scene.direction_offset / scene.wavelength
    amplitude = chain.input_current * cell.transmission * cell.length
    kappa = amplitude * np.sinc(x) * cell.point.field_slope
    return float(kappa), scene.phase_offset - math.pi * x


def signal_energy(
    kappa: float, signal_strength: float, window: MeasurementWindow, phase: float = 0.0
) -> float:
    """Energy of the beat current kappa*E_s*cos(omega_delta t + phase)."""
    return window.energy(kappa * signal_strength, phase)


def _bbr_prefactor(
    point: SusceptibilityPoint,
    chain: ReceiverChain,
    transmission: float,
    wavelength: float,
    radiance: float,
) -> float:
    current = chain.input_current * transmission
    return 0.5 * current**2 * wavelength**2 * point.field_slope**2 * radiance


def bbr_noise_density_continuous(
    cell: ContinuousCell,
    chain: ReceiverChain,
    wavelength: float,
    theta_l: float,
    radiance: float,
) -> float:
    """Power spectral density of the BBR-induced photocurrent."""
    d = cell.length / wavelength
    prefactor = _bbr_prefactor(
        cell.point, chain, cell.transmission, wavelength, radiance
    )
    return prefactor * xi(d, theta_l)


def psn_density(chain: ReceiverChain, cell: ContinuousCell) -> float:
    """Photon shot noise density q*I_dc."""
    return constants.e * chain.dc_current(cell.length, cell.point.chi)


def pattern_continuous(theta_delta, length: float, wavelength: float):
    """Reception pattern sinc^2(L theta_delta / lambda_l), 1 on the beam."""
    if length <= 0 or wavelength <= 0:
        raise ValueError("length and wavelength must be positive")
    return np.sinc(length * np.asarray(theta_delta) / wavelength) ** 2


def half_power_width(pattern: Callable[[float], float], samples: int = 20001) -> float:
    """Full width in theta of the main lobe at half power.

    Raises:
        HpbwUndefined: if the pattern stays above 1/2 up to |theta_delta| = 2.
    """
    grid = np.linspace(0.0, VISIBLE_LIMIT, samples)
    values = np.asarray(pattern(grid)) - 0.5
    below = np.nonzero(values < 0)[0]
    if below.size == 0:
        raise HpbwUndefined("pattern stays above half power across the visible region")
    first = below[0]
    half = brentq(
        lambda t: float(pattern(t)) - 0.5, grid[first - 1], grid[first], xtol=1e-14
    )
    return 2.0 * half


def hpbw_continuous(
    length: float, wavelength: float, method: str = "analytic"
) -> float:
    """Half-power beamwidth in theta-space (rad) of a continuous cell.

    Raises:
        HpbwUndefined: when the half-power point lies beyond |theta_delta| = 2.
    """
    if method == "numeric":
        return half_power_width(lambda t: pattern_continuous(t, length, wavelength))
    width = HPBW_FACTOR * wavelength / length
    if 0.5 * width > VISIBLE_LIMIT:
        raise HpbwUndefined(
            f"half-power point {0.5 * width:.4g} lies outside the visible region"
        )
    return width


def _hpbw_or_nan(compute: Callable[[], float]) -> float:
    try:
        return compute()
    except HpbwUndefined:
        return math.nan


def snr_continuous(
    cell: ContinuousCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Exact first-order SNR of a continuous cell."""
    kappa, phase = intrinsic_gain_continuous(cell, chain, scene)
    wavelength = scene.wavelength
    return SnrReport.from_energies(
        signal_energy=signal_energy(kappa, scene.signal.strength, window, phase),
        bbr_density=bbr_noise_density_continuous(
            cell, chain, wavelength, scene.lo.theta, radiance
        ),
        psn_density=psn_density(chain, cell),
        pattern_gain=float(
            pattern_continuous(scene.direction_offset, cell.length, wavelength)
        ),
        intrinsic_gain=kappa,
        signal_phase=phase,
        hpbw=_hpbw_or_nan(lambda: hpbw_continuous(cell.length, wavelength)),
    )


def snr_short_cell(
    cell: ContinuousCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Short-cell asymptote (L much smaller than the wavelength), direction free."""
    amplitude = chain.input_current * cell.transmission * cell.length
    kappa = amplitude * cell.point.field_slope
    prefactor = _bbr_prefactor(
        cell.point, chain, cell.transmission, scene.wavelength, radiance
    )
    return SnrReport.from_energies(
        signal_energy=signal_energy(kappa, scene.signal.strength, window, 0.0),
        bbr_density=prefactor * (cell.length / scene.wavelength) ** 2,
        psn_density=psn_density(chain, cell),
        pattern_gain=1.0,
        intrinsic_gain=kappa,
        signal_phase=0.0,
    )


def snr_point_receiver(
    cell: ContinuousCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """SNR with the cell's atoms gathered at z = 0 (L -> 0 at fixed atom count).

    The optical depth chi_l L and the slope length chi_dot_l L are held while the
    exact continuous SNR is evaluated on a cell a millionth of a wavelength long.
    """
    length = POINT_RECEIVER_LENGTH * scene.wavelength
    ratio = cell.length / length
    point = replace(
        cell.point,
        chi=cell.point.chi * ratio,
        chi_slope=cell.point.chi_slope * ratio,
    )
    return snr_continuous(ContinuousCell(length, point), chain, scene, window, radiance)


def snr_long_cell(
    cell: ContinuousCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> SnrReport:
    """Long-cell asymptote (L much larger than the wavelength)."""
    kappa, phase = intrinsic_gain_continuous(cell, chain, scene)
    prefactor = _bbr_prefactor(
        cell.point, chain, cell.transmission, scene.wavelength, radiance
    )
    return SnrReport.from_energies(
        signal_energy=signal_energy(kappa, scene.signal.strength, window, phase),
        bbr_density=prefactor * 0.5 * cell.length / scene.wavelength,
        psn_density=psn_density(chain, cell),
        pattern_gain=float(
            pattern_continuous(scene.direction_offset, cell.length, scene.wavelength)
        ),
        intrinsic_gain=kappa,
        signal_phase=phase,
        hpbw=_hpbw_or_nan(lambda: hpbw_continuous(cell.length, scene.wavelength)),
    )


def regime_snrs_long(
    cell: ContinuousCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> Tuple[float, float]:
    """BBR-limited and PSN-limited SNRs of an aligned long cell."""
    es2t = scene.signal.strength**2 * window.duration
    snr_bbr = _ratio(2.0 * cell.length * es2t, scene.wavelength * radiance)
    aperture = atomic_aperture(cell.length, cell.point.chi)
    snr_psn = _ratio(aperture * es2t, chain.psn_constant(cell.point))
    return snr_bbr, snr_psn


def offbeam_bounds(
    theta_delta: float,
    cell: ContinuousCell,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
) -> Tuple[float, float]:
    """Upper bounds on the BBR- and PSN-limited SNRs away from the beam direction."""
    if theta_delta == 0:
        return math.inf, math.inf
    es2t = scene.signal.strength**2 * window.duration
    lam = scene.wavelength
    spread = math.pi**2 * theta_delta**2
    bound_bbr = _ratio(2.0 * lam * es2t, spread * cell.length * radiance)
    bound_psn = _ratio(
        lam**2 * cell.transmission * es2t, spread * chain.psn_constant(cell.point)
    )
    return bound_bbr, bound_psn


def atomic_aperture(length, chi: float):
    """Atomic aperture L^2 exp(-chi L) in m^2."""
    length = np.asarray(length, dtype=float)
    value = length**2 * np.exp(-chi * length)
    return float(value) if value.ndim == 0 else value


def optimal_length(chi: float) -> Tuple[float, float]:
    """Cell length maximizing the atomic aperture and the aperture there."""
    if chi <= 0:
        raise ValueError(f"chi must be positive, got {chi}")
    return 2.0 / chi, 4.0 / (math.e**2 * chi**2)


def optimal_length_numeric(chi: float) -> Tuple[float, float]:
    """Golden-section maximization of the atomic aperture."""
    if chi <= 0:
        raise ValueError(f"chi must be positive, got {chi}")
    result = minimize_scalar(
        lambda length: -atomic_aperture(length, chi),
        bracket=(0.5 / chi, 2.0 / chi * 1.1, 20.0 / chi),
        method="golden",
        tol=1e-10,
    )
    return float(result.x), float(-result.fun)


def asymptotic_crossover(
    point: SusceptibilityPoint,
    chain: ReceiverChain,
    scene: FieldScene,
    window: MeasurementWindow,
    radiance: float,
    bracket: Tuple[float, float] = (1e-3, 1.0),
) -> float:
    """Cell length at which the short- and long-cell SNR asymptotes intersect."""

    def gap(length: float) -> float:
        cell = ContinuousCell(length, point)
        short = snr_short_cell(cell, chain, scene, window, radiance).bbr_density
        long = snr_long_cell(cell, chain, scene, window, radiance).bbr_density
        return math.log(short / long)

    return brentq(gap, *bracket, xtol=1e-12)

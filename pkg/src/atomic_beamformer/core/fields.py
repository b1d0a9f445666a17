"""
Plane-wave RF fields and blackbody-radiation noise statistics.

Directions are carried as theta = sin(angle) relative to the cell axis. Noise
amplitudes are per square-root hertz; energies downstream multiply by the
measurement bandwidth.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import constants

from .errors import BeatFrequencyWarning, CovarianceNotPSD, warn

logger = logging.getLogger(__name__)

FREE_SPACE_IMPEDANCE = 376.730313668


def theta_from_angle(angle):
    """Direction variable theta = sin(angle) for an angle in radians."""
    return np.sin(angle)


def angle_from_theta(theta):
    """Physical angle in radians for a direction variable theta."""
    return np.arcsin(np.clip(theta, -1.0, 1.0))


@dataclass(frozen=True)
class PlaneWave:
    """A far-field plane wave polarized along the probe axis."""
    strength: float
    angular_frequency: float
    theta: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError(f"strength must be non-negative, got {self.strength}")
        if self.angular_frequency <= 0:
            raise ValueError(
                f"angular_frequency must be positive, got {self.angular_frequency}"
            )
        if abs(self.theta) > 1.0:
            raise ValueError(f"theta must lie in [-1, 1], got {self.theta}")

    @property
    def frequency(self) -> float:
        return self.angular_frequency / (2.0 * math.pi)

    @property
    def wavelength(self) -> float:
        return constants.c / self.frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class FieldScene:
    """LO, signal and interfering waves seen by one receiver."""
    lo: PlaneWave
    signal: PlaneWave
    interferers: Tuple[PlaneWave, ...] = ()

    def __post_init__(self):
        if self.lo.strength <= 0:
            raise ValueError("lo.strength must be positive")
        object.__setattr__(self, "interferers", tuple(self.interferers))
        if abs(self.beat_frequency) >= 1e-3 * self.lo.angular_frequency:
            warn(
                BeatFrequencyWarning,
                f"beat frequency {self.beat_frequency:.6g} rad/s is not small against "
                f"the LO frequency {self.lo.angular_frequency:.6g} rad/s",
            )

    @property
    def beat_frequency(self) -> float:
        return self.signal.angular_frequency - self.lo.angular_frequency

    @property
    def direction_offset(self) -> float:
        return self.signal.theta - self.lo.theta

    @property
    def phase_offset(self) -> float:
        return self.signal.phase - self.lo.phase

    @property
    def wavelength(self) -> float:
        """LO wavelength; the signal and interferers share it to first order."""
        return self.lo.wavelength

    @property
    def wavenumber(self) -> float:
        return self.lo.wavenumber


@dataclass(frozen=True)
class BbrModel:
    """Blackbody radiation at the LO carrier."""
    temperature: float
    frequency: float

    def __post_init__(self):
        if self.temperature <= 0 or self.frequency <= 0:
            raise ValueError("temperature and frequency must be positive")

    @property
    def radiance(self) -> float:
        return bbr_radiance(self.frequency, self.temperature)


def bbr_radiance(frequency: float, temperature: float) -> float:
    """BBR spectral radiance in V^2 m^-2 s at `frequency` (Hz) and `temperature` (K)."""
    if frequency <= 0 or temperature <= 0:
        raise ValueError("frequency and temperature must be positive")
    thermal = FREE_SPACE_IMPEDANCE * constants.k * temperature
    return 2.0 * math.pi * thermal * frequency**2 / constants.c**2


def rabi_signal(scene: FieldScene, dipole_moment: float, t, z):
    """Complex signal Rabi frequency referenced to the LO phase, in rad/s."""
    amplitude = dipole_moment * scene.signal.strength / constants.hbar
    phase = (
        scene.beat_frequency * np.asarray(t)
        - scene.wavenumber * np.asarray(z) * scene.direction_offset
        + scene.phase_offset
    )
    return amplitude * np.exp(1j * phase)


def bbr_spatial_correlation(z, z_prime, wavelength: float):
    """Normalized spatial correlation sinc(2(z - z')/wavelength) of the BBR field."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return np.sinc(2.0 * (np.asarray(z) - np.asarray(z_prime)) / wavelength)


class BbrSampler:
    """Gaussian sampler for the BBR field on a fixed grid.

    The covariance radiance * sinc(2(z_i - z_j)/wavelength) is factored once
    by eigendecomposition; negative eigenvalues are clipped to zero.
    """

    def __init__(self, grid: Sequence[float], wavelength: float, radiance: float):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least two points")
        if np.any(np.diff(grid) < 0):
            raise ValueError("grid must be sorted")
        if radiance < 0:
            raise ValueError("radiance must be non-negative")

        self.grid = grid
        correlation = bbr_spatial_correlation(grid[:, None], grid[None, :], wavelength)
        covariance = radiance * correlation
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        clipped = -np.sum(eigenvalues[eigenvalues < 0])
        trace = float(np.trace(covariance))
        if trace > 0 and clipped > 1e-6 * trace:
            warn(
                CovarianceNotPSD,
                f"clipped eigenvalue mass {clipped:.3g} exceeds 1e-6 of the trace "
                f"{trace:.3g}",
            )
        self._factor = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))

    def draw(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Real field samples; shape (n,) or (size, n)."""
        shape = (self.grid.size,) if size is None else (size, self.grid.size)
        white = rng.standard_normal(shape)
        return white @ self._factor.T

    def draw_complex(
        self, rng: np.random.Generator, size: Optional[int] = None
    ) -> np.ndarray:
        """Complex field samples with E[E E'*] equal to the real covariance."""
        return (self.draw(rng, size) + 1j * self.draw(rng, size)) / math.sqrt(2.0)


def sample_bbr_field(
    grid: Sequence[float],
    wavelength: float,
    radiance: float,
    seed: int,
    size: Optional[int] = None,
) -> np.ndarray:
    """Draw real BBR field amplitudes on `grid`; deterministic in `seed`."""
    sampler = BbrSampler(grid, wavelength, radiance)
    return sampler.draw(np.random.default_rng(seed), size)

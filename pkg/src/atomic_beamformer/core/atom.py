"""
Four-level ladder atom: Hamiltonian, Lindblad dynamics and steady state.

The density matrix is vectorized row-major (index 4p+q holds rho[p, q]) so the
Lindblad generator becomes a 16x16 complex matrix. Doppler averaging batches
all velocity classes into a single stacked solve.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import constants
from scipy.interpolate import CubicSpline

from .errors import NonConverged, SingularSystem

logger = logging.getLogger(__name__)

# Indices of rho[p, p] in the row-major vectorization.
_DIAGONAL = (0, 5, 10, 15)
_IDENTITY = np.eye(4)
_MAX_CONDITION = 1e12
_SLOPE_TOLERANCE = 1e-4


@dataclass(frozen=True)
class AtomSystem:
    """Level structure and laser settings of the four-level ladder.

    All rates, detunings and Rabi frequencies are angular (rad/s).
    """
    gamma2: float
    gamma3: float
    gamma4: float
    mu12: float
    mu34: float
    probe_rabi: float
    coupling_rabi: float
    probe_wavelength: float
    coupling_wavelength: float
    atom_mass: float
    atomic_density: float
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_l: float = 0.0

    def __post_init__(self):
        for name in ("gamma2", "gamma3", "gamma4", "probe_rabi", "coupling_rabi"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        for name in (
            "probe_wavelength",
            "coupling_wavelength",
            "atomic_density",
            "atom_mass",
        ):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def probe_wavenumber(self) -> float:
        return 2.0 * math.pi / self.probe_wavelength

    @property
    def probe_angular_frequency(self) -> float:
        return 2.0 * math.pi * constants.c / self.probe_wavelength

    @property
    def decay_rates(self) -> np.ndarray:
        return np.array([0.0, self.gamma2, self.gamma3, self.gamma4])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A 4x4 quantum state with trace, Hermiticity and positivity checks."""
    data: np.ndarray

    @property
    def rho12(self) -> complex:
        """Probe coherence whose imaginary part is negative under absorption."""
        return complex(self.data[1, 0])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))

    def is_valid(self, tolerance: float = 1e-10) -> bool:
        """Check the trace, Hermiticity, diagonal-range and positivity invariants."""
        diagonal = np.real(np.diag(self.data))
        return (
            abs(self.trace - 1.0) <= tolerance
            and self.hermiticity_error() <= tolerance
            and bool(np.all(diagonal >= -1e-8) and np.all(diagonal <= 1.0 + 1e-8))
            and bool(np.all(self.eigenvalues() >= -1e-6))
        )


@dataclass(frozen=True)
class Environment:
    """Thermal environment of the vapor and the Doppler quadrature settings."""
    temperature: float = 290.0
    doppler_nodes: int = 41
    doppler_truncation: float = 5.0
    doppler_method: str = "gauss-hermite"

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.doppler_nodes < 3 or self.doppler_nodes % 2 == 0:
            raise ValueError(
                f"doppler_nodes must be odd and >= 3, got {self.doppler_nodes}"
            )
        if self.doppler_truncation <= 0:
            raise ValueError(
                f"doppler_truncation must be positive, got {self.doppler_truncation}"
            )
        if self.doppler_method not in ("gauss-hermite", "trapezoid"):
            raise ValueError(
                "doppler_method must be 'gauss-hermite' or 'trapezoid', "
                f"got {self.doppler_method!r}"
            )

    def thermal_velocity(self, atom_mass: float) -> float:
        """Most probable speed scale sqrt(kB*T/m) of the velocity distribution."""
        return math.sqrt(constants.k * self.temperature / atom_mass)

    def velocity_nodes(self, atom_mass: float) -> Tuple[np.ndarray, np.ndarray]:
        """Velocities and normalized weights for the Maxwell-Boltzmann average."""
        u = self.thermal_velocity(atom_mass)
        if self.doppler_method == "gauss-hermite":
            x, w = hermgauss(self.doppler_nodes)
            return u * x, w / math.sqrt(math.pi)
        edge = self.doppler_truncation
        x = np.linspace(-edge, edge, self.doppler_nodes)
        w = np.full_like(x, x[1] - x[0])
        w[[0, -1]] *= 0.5
        w *= np.exp(-x**2) / math.sqrt(math.pi)
        return u * x, w / w.sum()


@dataclass(frozen=True)
class SusceptibilityPoint:
    """Linearization of the susceptibility around the LO operating point."""
    chi: float
    chi_slope: float
    operating_rabi: float
    dipole_moment: float

    def __post_init__(self):
        for name in ("chi", "chi_slope", "operating_rabi", "dipole_moment"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")
        if self.operating_rabi < 0:
            raise ValueError(
                f"operating_rabi must be non-negative, got {self.operating_rabi}"
            )

    @property
    def field_slope(self) -> float:
        """Change of susceptibility per unit RF field strength, in m^-1 per V/m."""
        return self.chi_slope * self.dipole_moment / constants.hbar


def _hamiltonians(
    system: AtomSystem, rabi_rf: complex, delta_p: np.ndarray, delta_c: np.ndarray
) -> np.ndarray:
    n = delta_p.size
    h = np.zeros((n, 4, 4), dtype=complex)
    h[:, 1, 1] = -delta_p
    h[:, 2, 2] = -delta_p - delta_c
    h[:, 3, 3] = -delta_p - delta_c - system.delta_l
    h[:, 0, 1] = h[:, 1, 0] = 0.5 * system.probe_rabi
    h[:, 1, 2] = h[:, 2, 1] = 0.5 * system.coupling_rabi
    h[:, 2, 3] = 0.5 * np.conj(rabi_rf)
    h[:, 3, 2] = 0.5 * rabi_rf
    return h


def build_hamiltonian(system: AtomSystem, rabi_rf: complex) -> np.ndarray:
    """Rotating-frame Hamiltonian divided by hbar, in rad/s."""
    delta_p, delta_c = np.array([system.delta_p]), np.array([system.delta_c])
    return _hamiltonians(system, rabi_rf, delta_p, delta_c)[0]


def _dissipator(system: AtomSystem) -> np.ndarray:
    gamma = np.diag(system.decay_rates)
    d = -0.5 * (np.kron(gamma, _IDENTITY) + np.kron(_IDENTITY, gamma))
    d[0, 5] += system.gamma2
    d[0, 15] += system.gamma4
    d[5, 10] += system.gamma3
    return d.astype(complex)


def _liouvillians(system: AtomSystem, hamiltonians: np.ndarray) -> np.ndarray:
    n = hamiltonians.shape[0]
    left = np.einsum("nij,kl->nikjl", hamiltonians, _IDENTITY).reshape(n, 16, 16)
    right = np.einsum("ij,nlk->nikjl", _IDENTITY, hamiltonians).reshape(n, 16, 16)
    return -1j * (left - right) + _dissipator(system)


def liouvillian(system: AtomSystem, rabi_rf: complex) -> np.ndarray:
    """16x16 generator acting on the row-major vectorized density matrix."""
    return _liouvillians(system, build_hamiltonian(system, rabi_rf)[np.newaxis])[0]


def lindblad_rhs(
    system: AtomSystem, rho: DensityMatrix, rabi_rf: complex
) -> np.ndarray:
    """Time derivative of rho under the Lindblad master equation."""
    h = build_hamiltonian(system, rabi_rf)
    gamma = np.diag(system.decay_rates)
    r = rho.data
    repopulation = np.zeros((4, 4), dtype=complex)
    repopulation[0, 0] = system.gamma2 * r[1, 1] + system.gamma4 * r[3, 3]
    repopulation[1, 1] = system.gamma3 * r[2, 2]
    return -1j * (h @ r - r @ h) - 0.5 * (gamma @ r + r @ gamma) + repopulation


def _solve_steady(
    system: AtomSystem, rabi_rf: complex, delta_p: np.ndarray, delta_c: np.ndarray
) -> np.ndarray:
    if max(system.gamma2, system.gamma3, system.gamma4) == 0:
        raise SingularSystem("all decay rates are zero; the steady state is not unique")

    generators = _liouvillians(system, _hamiltonians(system, rabi_rf, delta_p, delta_c))
    scale = max(
        system.gamma2,
        system.gamma3,
        system.gamma4,
        system.probe_rabi,
        system.coupling_rabi,
        abs(rabi_rf),
    )
    generators /= scale
    generators[:, 0, :] = 0.0
    generators[:, 0, list(_DIAGONAL)] = 1.0

    condition = np.linalg.cond(generators)
    if not np.all(np.isfinite(condition)) or np.max(condition) > _MAX_CONDITION:
        raise SingularSystem(
            "steady-state system is rank deficient "
            f"(condition number {np.max(condition):.3g})"
        )

    rhs = np.zeros((delta_p.size, 16), dtype=complex)
    rhs[:, 0] = 1.0
    rho = np.linalg.solve(generators, rhs[..., np.newaxis])[..., 0].reshape(-1, 4, 4)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
    return rho / np.real(np.trace(rho, axis1=1, axis2=2))[:, np.newaxis, np.newaxis]


def steady_state(system: AtomSystem, rabi_rf: complex) -> DensityMatrix:
    """Stationary state of the master equation from a direct linear solve.

    Raises:
        SingularSystem: when the generator is degenerate, e.g. with no decay.
    """
    delta_p, delta_c = np.array([system.delta_p]), np.array([system.delta_c])
    rho = _solve_steady(system, rabi_rf, delta_p, delta_c)
    return DensityMatrix(rho[0])


def doppler_average_rho12(
    system: AtomSystem, env: Environment, rabi_rf: complex
) -> complex:
    """Probe coherence averaged over the thermal velocity distribution."""
    velocities, weights = env.velocity_nodes(system.atom_mass)
    delta_p = system.delta_p - 2.0 * math.pi * velocities / system.probe_wavelength
    delta_c = system.delta_c + 2.0 * math.pi * velocities / system.coupling_wavelength
    rho = _solve_steady(system, rabi_rf, delta_p, delta_c)
    return complex(np.sum(weights * rho[:, 1, 0]))


def susceptibility(system: AtomSystem, env: Environment, rabi_amp: float) -> float:
    """Probe amplitude attenuation coefficient (1/m) at RF Rabi amplitude rabi_amp."""
    if system.probe_rabi <= 0:
        raise ValueError("probe_rabi must be positive to define a susceptibility")
    dipole = system.probe_wavenumber * system.atomic_density * system.mu12**2
    prefactor = dipole / (constants.epsilon_0 * constants.hbar * system.probe_rabi)
    return -prefactor * doppler_average_rho12(system, env, abs(rabi_amp)).imag


def susceptibility_slope(
    system: AtomSystem, env: Environment, operating_rabi: float
) -> float:
    """Derivative of the susceptibility in RF Rabi amplitude at operating_rabi.

    A central difference with step h is checked against step h/2; the two must
    agree to 1e-4 relative. Where the slope itself vanishes they must agree to
    1e-8 |chi|/Omega.

    Raises:
        NonConverged: when the two estimates disagree.
    """
    if operating_rabi <= 0:
        raise ValueError(f"operating_rabi must be positive, got {operating_rabi}")

    def central(step: float) -> float:
        upper = susceptibility(system, env, operating_rabi + step)
        lower = susceptibility(system, env, operating_rabi - step)
        return (upper - lower) / (2.0 * step)

    step = max(1e-4 * operating_rabi, 2.0 * math.pi * 10.0)
    coarse = central(step)
    fine = central(0.5 * step)
    chi = susceptibility(system, env, operating_rabi)
    vanishing = _SLOPE_TOLERANCE * abs(chi) / operating_rabi
    scale = max(abs(coarse), abs(fine), vanishing)
    if abs(coarse - fine) > _SLOPE_TOLERANCE * scale:
        raise NonConverged(
            f"susceptibility slope at {operating_rabi:.6g} rad/s not converged: "
            f"{coarse:.6g} vs {fine:.6g}"
        )
    logger.debug(
        f"Slope at {operating_rabi:.6g} rad/s: {coarse:.6g} (check {fine:.6g})"
    )
    return coarse


def operating_point(
    system: AtomSystem, env: Environment, lo_strength: float
) -> SusceptibilityPoint:
    """Linearize the susceptibility at the Rabi frequency set by the LO field."""
    rabi = system.mu34 * lo_strength / constants.hbar
    chi = susceptibility(system, env, rabi)
    slope = susceptibility_slope(system, env, rabi)
    logger.info(
        f"Operating point: Omega_l={rabi:.6g} rad/s, chi={chi:.6g} 1/m, "
        f"slope={slope:.6g}"
    )
    return SusceptibilityPoint(
        chi=chi, chi_slope=slope, operating_rabi=rabi, dipole_moment=system.mu34
    )


@dataclass(frozen=True)
class LinearSusceptibility:
    """First-order susceptibility model around a fixed operating point."""
    point: SusceptibilityPoint

    def __call__(self, rabi_amp):
        shift = np.asarray(rabi_amp) - self.point.operating_rabi
        return self.point.chi + self.point.chi_slope * shift


@dataclass(frozen=True, eq=False)
class SusceptibilityCurve:
    """Cubic interpolation of the susceptibility over a log-spaced Rabi grid.

    The grid spans span[0]*center .. span[1]*center and is doubled until the
    interpolant matches direct solves at every midpoint to `tolerance`.
    """
    rabi: np.ndarray
    chi: np.ndarray
    _spline: Callable = field(repr=False, compare=False, default=None)

    @classmethod
    def build(
        cls,
        system: AtomSystem,
        env: Environment,
        center: float,
        span: Sequence[float] = (0.1, 10.0),
        tolerance: float = 1e-6,
        initial_points: int = 33,
        max_points: int = 4097,
    ) -> "SusceptibilityCurve":
        evaluate = np.vectorize(lambda omega: susceptibility(system, env, omega))
        log_lo, log_hi = math.log(span[0] * center), math.log(span[1] * center)
        points = initial_points
        while points <= max_points:
            grid = np.linspace(log_lo, log_hi, points)
            values = evaluate(np.exp(grid))
            spline = CubicSpline(grid, values)
            midpoints = 0.5 * (grid[1:] + grid[:-1])
            exact = evaluate(np.exp(midpoints))
            scale = np.maximum(np.abs(exact), np.max(np.abs(values)) * 1e-12)
            error = float(np.max(np.abs(spline(midpoints) - exact) / scale))
            logger.debug(
                f"Susceptibility table with {points} points: "
                f"max relative error {error:.3g}"
            )
            if error < tolerance:
                return cls(rabi=np.exp(grid), chi=values, _spline=spline)
            points = 2 * points - 1
        raise NonConverged(
            f"susceptibility table did not reach relative error {tolerance:g}"
        )

    def __call__(self, rabi_amp):
        rabi_amp = np.asarray(rabi_amp, dtype=float)
        if np.any(rabi_amp < self.rabi[0]) or np.any(rabi_amp > self.rabi[-1]):
            raise ValueError("Rabi amplitude outside the tabulated range")
        return self._spline(np.log(rabi_amp))


def coherence_ode_reference(
    system: AtomSystem,
    rabi_rf: complex,
    duration: float,
    initial: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Integrate the master equation in time; used to cross-check steady_state."""
    from scipy.integrate import solve_ivp

    generator = liouvillian(system, rabi_rf)
    start = np.zeros(16, dtype=complex)
    if initial is None:
        start[0] = 1.0
    else:
        start[:] = np.asarray(initial, dtype=complex).reshape(16)
    solution = solve_ivp(
        lambda _, y: generator @ y,
        (0.0, duration),
        start,
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
    )
    return solution.y[:, -1].reshape(4, 4)

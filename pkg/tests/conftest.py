"""
Shared test fixtures for atomic-beamformer tests.
"""

import math
import shutil
import tempfile
from pathlib import Path

import pytest
from scipy import constants

from atomic_beamformer.core.atom import AtomSystem, Environment
from atomic_beamformer.settings import parse_config

TWO_PI = 2.0 * math.pi
CS_MASS = 132.905451961 * constants.atomic_mass


@pytest.fixture(scope="session")
def default_config():
    """Run configuration built from the defaults table alone."""
    return parse_config("")


@pytest.fixture
def broad_system():
    """Four-level ladder whose natural widths dominate a cold Doppler profile."""
    return AtomSystem(
        gamma2=TWO_PI * 6e6,
        gamma3=TWO_PI * 1e6,
        gamma4=TWO_PI * 1e6,
        mu12=2.5e-29,
        mu34=1.3318e-25,
        probe_rabi=TWO_PI * 2e6,
        coupling_rabi=TWO_PI * 5e6,
        probe_wavelength=852e-9,
        coupling_wavelength=509e-9,
        atom_mass=CS_MASS,
        atomic_density=4.89e16,
    )


@pytest.fixture
def cold_env():
    """Millikelvin vapor; Doppler width well below the natural linewidths."""
    return Environment(temperature=1e-3)


@pytest.fixture
def temp_directory():
    """Create a temporary directory for testing."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir)

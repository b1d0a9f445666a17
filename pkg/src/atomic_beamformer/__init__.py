"""
atomic-beamformer - SNR and beam pattern model of Rydberg atomic RF receivers.

Covers continuous and segmental vapor cells under blackbody and shot noise.
"""

from .app_meta import VERSION, APP_NAME, ORG_NAME
from .main import main

__version__ = VERSION
__author__ = ORG_NAME

__all__ = ["main", "__version__", "APP_NAME"]

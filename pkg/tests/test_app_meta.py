"""
Tests for app metadata.
"""

import atomic_beamformer
from atomic_beamformer.app_meta import (
    APP_NAME,
    BUILD_DATE,
    CHANNEL,
    ORG_NAME,
    VERSION,
    get_version_info,
    get_version_string,
)


class TestAppMeta:
    """Test app metadata functionality."""

    def test_constants(self):
        """Test that core constants are defined correctly."""
        assert APP_NAME == "atomic-beamformer"
        assert isinstance(ORG_NAME, str)
        assert isinstance(VERSION, str)
        assert isinstance(BUILD_DATE, str)
        assert CHANNEL in ["dev", "release"]

    def test_version_info(self):
        """Test version info dictionary."""
        info = get_version_info()
        assert info["app_name"] == APP_NAME
        assert info["version"] == VERSION
        assert info["is_dev"] != info["is_release"] or CHANNEL not in ("dev", "release")

    def test_version_string(self):
        """Dev builds carry a -dev suffix."""
        version_str = get_version_string()
        assert version_str.startswith(VERSION)
        assert version_str.endswith("-dev") == (CHANNEL == "dev")

    def test_package_version(self):
        """The package exposes the same version."""
        assert atomic_beamformer.__version__ == VERSION

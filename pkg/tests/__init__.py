"""Tests for atomic-beamformer."""

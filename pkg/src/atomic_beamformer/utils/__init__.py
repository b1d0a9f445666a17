"""Utility helpers for atomic-beamformer."""

"""Experiment drivers: sweeps, brute-force oracles and the capacity study."""

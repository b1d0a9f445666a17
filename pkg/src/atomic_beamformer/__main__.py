"""
Entry point for running atomic-beamformer as a module.

Usage: python -m atomic_beamformer <subcommand> [options]
"""

from .main import main

if __name__ == "__main__":
    main()

"""Result tables and figures for atomic-beamformer."""

from .results import ResultTable, render_svg

__all__ = ['ResultTable', 'render_svg']

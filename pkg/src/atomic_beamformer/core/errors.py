"""
Exception and warning types for atomic-beamformer.

Every numerical failure raised by the core and ops packages derives from
BeamformerError so the command layer can map it to an exit status; soft
numerical issues are reported as BeamformerWarning subclasses.
"""

import logging
import warnings

logger = logging.getLogger(__name__)


class BeamformerError(Exception):
    """Base class for all atomic-beamformer errors."""


class SingularSystem(BeamformerError):
    """The steady-state linear system has no unique solution."""


class NonConverged(BeamformerError):
    """A numerical estimate failed its self-consistency check."""


class HpbwUndefined(BeamformerError):
    """The reception pattern never drops to half power inside the visible region."""


class ResolutionTooCoarse(BeamformerError):
    """A spatial grid is too coarse for the requested oracle."""


class ConfigError(BeamformerError):
    """A configuration document is missing, duplicated or mis-typed."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class BeamformerWarning(UserWarning):
    """Base class for all atomic-beamformer warnings."""


class CovarianceNotPSD(BeamformerWarning):
    """Clipped negative eigenvalues carried a noticeable share of the trace."""


class WindowMisaligned(BeamformerWarning):
    """The measurement window is not an integer number of beat periods."""


class BeatFrequencyWarning(BeamformerWarning):
    """The beat frequency is not small against the LO frequency."""


def warn(category: type, message: str, stacklevel: int = 3) -> None:
    """Emit a project warning and mirror it to the log."""
    logger.warning(message)
    warnings.warn(message, category, stacklevel=stacklevel)

"""Exception hierarchy for sidlab.

Every error derives from :class:`SidlabError` and from the builtin that best
describes it, so callers may catch either.
"""

from __future__ import annotations

from typing import Any


class SidlabError(Exception):
    """Base class for all sidlab errors."""


class ConfigError(SidlabError, ValueError):
    """Configuration failed schema validation or references an unknown name."""


class DimensionMismatchError(SidlabError, ValueError):
    """Array shapes disagree with the declared state dimension."""


class EmptyMeasureError(SidlabError, ValueError):
    """A measure or snapshot store has no atoms."""


class SizeCapError(SidlabError, ValueError):
    """An exact computation would exceed its size cap."""


class SimulationExplosionError(SidlabError, RuntimeError):
    """A particle left the explosion guard radius or became non-finite."""

    def __init__(self, step: int, particle: int, value: float) -> None:
        self.step = step
        self.particle = particle
        self.value = value
        super().__init__(
            f"Simulation exploded at step {step}: particle {particle} reached |z|={value:.3g}"
        )


class ConvergenceError(SidlabError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message: str, best: Any = None, residual: float = float("inf")) -> None:
        self.best = best
        self.residual = residual
        super().__init__(f"{message} (best residual {residual:.3e})")


class DivergenceError(SidlabError, RuntimeError):
    """Fixed-point iterates left the admissible region."""


class DomainError(SidlabError, ValueError):
    """A domain is malformed or a precondition on it does not hold."""


class InsufficientDataError(SidlabError, ValueError):
    """Too few usable samples for a statistical estimate."""


class NotGradientError(SidlabError, ValueError):
    """The frozen drift is not of gradient type."""


class InwardFlowError(SidlabError, ValueError):
    """The force field does not point strictly inward on the boundary."""

    def __init__(self, point: Any, flux: float) -> None:
        self.point = point
        self.flux = flux
        super().__init__(f"Force is not inward at boundary point {point} (normal flux {flux:.3e})")


class FormatVersionError(SidlabError, ValueError):
    """A result file has an unexpected kind or format version."""


class ModelMismatchError(SidlabError, ValueError):
    """Result files from different models were combined."""


class UsageError(SidlabError, ValueError):
    """A command was invoked without the inputs it needs."""

"""Exception types shared across the package."""

from __future__ import annotations

import numpy as np


class DegenerateWeights(RuntimeError):
    """All unnormalized sample weights are zero.

    Carries the offending cost batch so callers can retry with a more
    forgiving weight transform.
    """

    def __init__(self, costs: np.ndarray, message: str = "all sample weights are zero"):
        super().__init__(message)
        self.costs = np.asarray(costs)


class RolloutDiverged(RuntimeError):
    """A rollout produced a non-finite state."""

    def __init__(self, timestep: int, sample_index: int | None = None):
        msg = f"state became non-finite at timestep {timestep}"
        if sample_index is not None:
            msg += f" (sample {sample_index})"
        super().__init__(msg)
        self.timestep = timestep
        self.sample_index = sample_index


class MomentInconsistency(ValueError):
    """Moment set violates the inequalities a real distribution must satisfy."""


class ConfigError(ValueError):
    """Experiment config file is malformed (missing/unknown/badly typed key)."""

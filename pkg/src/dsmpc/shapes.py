"""Cost-to-weight transforms.

Every sampling optimizer in this package turns a batch of rollout costs
into normalized non-negative sample weights.  The transform ("shape
function") is what distinguishes the classic algorithms:

  exponential           w ∝ exp(-J/λ)                 path-integral / MPPI
  normalized exp        w ∝ exp(-J_norm/λ)            MPPI with min-max cost scaling
  deformed exponential  w ∝ (1 - J/γ)_+^{1/(r-1)}     Tsallis-divergence updates
  sigmoid               w ∝ 1/(1+exp(-κ(-J-φ)))       soft elite threshold
  indicator             w ∝ 1{J ≤ γ}                  cross-entropy method elites

The deformed exponential interpolates between the other two families:
r → 1 (with γ = λ/(r-1)) recovers the exponential, r → ∞ recovers the
indicator step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeights

WEIGHT_SUM_TOL = 1e-9


class ShapeKind(str, enum.Enum):
    EXPONENTIAL = "exponential"
    NORMALIZED_EXPONENTIAL = "normalized_exponential"
    TSALLIS_REPARAM = "tsallis_reparam"
    SIGMOID = "sigmoid"
    INDICATOR = "indicator"


# Kinds whose threshold γ may come from either an explicit value or an
# elite fraction of the batch.
_THRESHOLDED = (ShapeKind.TSALLIS_REPARAM, ShapeKind.INDICATOR)


@dataclass(frozen=True)
class ShapeConfig:
    """Selects a shape function and its parameters.

    Attributes:
        kind: which transform to apply.
        lam: inverse temperature λ > 0 (exponential kinds).
        r: deformation r > 1 (tsallis_reparam); r→1 is exponential-like,
            r→∞ is a hard threshold.
        gamma: explicit cost threshold γ > 0 (tsallis_reparam, indicator).
        elite_fraction: fraction in (0, 1] of best samples used to set γ
            per batch; mutually exclusive with ``gamma``.
        kappa: sigmoid sharpness κ > 0.
        quantile_rho: soft elite level ρ in (0, 1) for the sigmoid center.
    """

    kind: ShapeKind
    lam: float = 1.0
    r: float = 2.0
    gamma: float | None = None
    elite_fraction: float | None = None
    kappa: float = 10.0
    quantile_rho: float = 0.1

    def __post_init__(self):
        if not isinstance(self.kind, ShapeKind):
            object.__setattr__(self, "kind", ShapeKind(self.kind))
        if not (self.lam > 0):
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not (self.r > 1):
            raise ValueError(f"r must exceed 1, got {self.r}")
        if not (self.kappa > 0):
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not (0 < self.quantile_rho < 1):
            raise ValueError(f"quantile_rho must lie in (0,1), got {self.quantile_rho}")
        if self.gamma is not None and not (self.gamma > 0):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.elite_fraction is not None and not (0 < self.elite_fraction <= 1):
            raise ValueError(f"elite_fraction must lie in (0,1], got {self.elite_fraction}")
        if self.kind in _THRESHOLDED:
            if (self.gamma is None) == (self.elite_fraction is None):
                raise ValueError(
                    f"{self.kind.value} requires exactly one of gamma / elite_fraction"
                )


def exp_r(x, r: float):
    """Deformed exponential (1 + (r-1)x)_+^{1/(r-1)}.

    Continuous, non-decreasing, equals 1 at x = 0 and 0 wherever
    1 + (r-1)x ≤ 0.  Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("exp_r requires finite x")
    if not (np.isfinite(r) and r > 1):
        raise ValueError(f"exp_r requires finite r > 1, got {r}")
    base = 1.0 + (r - 1.0) * x
    out = np.zeros_like(base)
    pos = base > 0
    # exp(log1p((r-1)x)/(r-1)) stays accurate as r → 1.
    out[pos] = np.exp(np.log1p((r - 1.0) * x[pos]) / (r - 1.0))
    if out.ndim == 0:
        return float(out)
    return out


def elite_threshold(costs, elite_fraction: float) -> float:
    """The ⌈elite_fraction·M⌉-th smallest cost of the batch.

    Used as the adaptive threshold γ when a shape config specifies an
    elite fraction instead of a fixed γ.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 1 or costs.size == 0:
        raise ValueError("costs must be a non-empty 1-D array")
    if not (0 < elite_fraction <= 1):
        raise ValueError(f"elite_fraction must lie in (0,1], got {elite_fraction}")
    k = math.ceil(elite_fraction * costs.size)
    return float(np.partition(costs, k - 1)[k - 1])


def _resolve_gamma(costs: np.ndarray, cfg: ShapeConfig) -> float:
    if cfg.gamma is not None:
        return cfg.gamma
    return elite_threshold(costs, cfg.elite_fraction)


def compute_weights(costs, cfg: ShapeConfig) -> np.ndarray:
    """Map a batch of M costs to normalized weights w ∝ S(-J).

    Returns a length-M vector of non-negative weights summing to 1.

    Raises:
        DegenerateWeights: every unnormalized weight is zero (e.g. all
            costs above the indicator threshold).  Callers may retry with
            the normalized-exponential kind, which cannot degenerate.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 1 or costs.size == 0:
        raise ValueError("costs must be a non-empty 1-D array")
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite")

    kind = cfg.kind
    if kind is ShapeKind.EXPONENTIAL:
        raw = np.exp(-costs / cfg.lam)
    elif kind is ShapeKind.NORMALIZED_EXPONENTIAL:
        span = costs.max() - costs.min()
        if span == 0.0:
            return np.full(costs.size, 1.0 / costs.size)
        raw = np.exp(-((costs - costs.min()) / span) / cfg.lam)
    elif kind is ShapeKind.TSALLIS_REPARAM:
        gamma = _resolve_gamma(costs, cfg)
        if not (gamma > 0):
            raise DegenerateWeights(costs, f"tsallis threshold γ={gamma} is not positive")
        # exp_r(-J/λ) with λ = (r-1)γ, i.e. (1 - J/γ)_+^{1/(r-1)}, computed
        # in log space with a max shift (cancelled by normalization) so
        # extreme cost/threshold ratios cannot overflow
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            ratio = costs / gamma
        raw = np.zeros_like(costs)
        pos = ratio < 1.0
        if pos.any():
            log_raw = np.log1p(-ratio[pos]) / (cfg.r - 1.0)
            raw[pos] = np.exp(log_raw - log_raw.max())
    elif kind is ShapeKind.SIGMOID:
        neg = -costs
        phi = np.quantile(neg, 1.0 - cfg.quantile_rho)
        raw = 1.0 / (1.0 + np.exp(-cfg.kappa * (neg - phi)))
    elif kind is ShapeKind.INDICATOR:
        gamma = _resolve_gamma(costs, cfg)
        raw = (costs <= gamma).astype(float)
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown shape kind {kind}")

    total = raw.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise DegenerateWeights(costs)
    return raw / total

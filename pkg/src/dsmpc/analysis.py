"""Sample-complexity bounds and their Monte-Carlo verification.

For a bounded shape function S ∈ [0,1] the parameter update
Θ' = Θ + E[S(-J)φ(u)]/E[S(-J)] estimated from M samples deviates from the
true update with controlled probability: the normalizer estimate obeys a
Hoeffding bound and the weighted-statistic estimate a Chebyshev bound
through the moment functional ψ.  The harness here measures the actual
violation frequencies on a scalar point-mass problem against those bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MomentInconsistency
from .shapes import ShapeConfig, ShapeKind


@dataclass(frozen=True)
class MomentSet:
    """First four raw moments of the sufficient statistic T(u)."""

    m1: float
    m2: float
    m3: float
    m4: float

    def __post_init__(self):
        # allow a little estimator slack on the defining inequalities
        if self.m2 < self.m1**2 - 1e-9:
            raise MomentInconsistency(f"M2={self.m2} < M1^2={self.m1**2}")
        if self.m4 < self.m2**2 - 1e-9:
            raise MomentInconsistency(f"M4={self.m4} < M2^2={self.m2**2}")

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "MomentSet":
        v = np.asarray(values, dtype=float)
        return cls(*(float(np.mean(v**i)) for i in (1, 2, 3, 4)))


def psi(moments: MomentSet) -> float:
    """ψ = sqrt(M4 - 4 M1 M3 + 6 M2 M1² - 3 M1⁴) + M2 - M1²."""
    radicand = (
        moments.m4
        - 4.0 * moments.m1 * moments.m3
        + 6.0 * moments.m2 * moments.m1**2
        - 3.0 * moments.m1**4
    )
    if radicand < -1e-12:
        raise MomentInconsistency(f"negative radicand {radicand} in psi")
    return float(np.sqrt(max(radicand, 0.0)) + moments.m2 - moments.m1**2)


def risk_bounds(
    eps1: float, eps2: float, num_samples: int, e1: float, moments: MomentSet
) -> tuple[float, float]:
    """Risk levels (ρ1, ρ2) for the two estimator deviations, clamped to 1.

    ρ1 = exp(-2 M ε1²) bounds P(|Ê1 - E1| ≥ ε1) for the empirical *mean*
    of a [0,1]-bounded shape (Hoeffding); ρ2 = ψ / (M ε2² E1²) bounds the
    weighted-statistic deviation (Chebyshev via the ψ variance bound).
    """
    if not (0 < eps1 < e1):
        raise ValueError("requires 0 < eps1 < E1")
    if not (eps2 > 0 and num_samples >= 1):
        raise ValueError("requires eps2 > 0 and M >= 1")
    rho1 = math.exp(-2.0 * num_samples * eps1**2)
    rho2 = psi(moments) / (num_samples * eps2**2 * e1**2)
    return min(rho1, 1.0), min(rho2, 1.0)


def paper_literal_rho1(eps1: float, num_samples: int) -> float:
    """The exp(-2 ε1²/M) form as printed; loosens with M, kept for reference."""
    return math.exp(-2.0 * eps1**2 / num_samples)


def update_error_interval(
    theta_next_true: float, e1: float, e2: float, eps1: float, eps2: float
) -> tuple[float, float]:
    """Interval guaranteed to contain the M-sample update estimate when
    both estimator deviations stay within (ε1, ε2)."""
    if not (e1 > eps1 >= 0):
        raise ValueError("requires E1 > eps1 >= 0")
    ratio = eps1 / (e1 - eps1)
    lower = theta_next_true - e2 * ratio - (1.0 - ratio) * eps2
    upper = theta_next_true + e2 * ratio + (1.0 + ratio) * eps2
    return lower, upper


def schedules(k: int, alpha0: float, a: float, m0: int, zeta: float) -> tuple[float, int]:
    """Step size α_k = α0/k^a and sample size M_k = ceil(M0 k^ζ), k >= 1."""
    if k < 1:
        raise ValueError("schedules start at k = 1")
    if not (alpha0 > 0 and 0 < a < 1 and m0 >= 1 and zeta >= 0):
        raise ValueError("requires alpha0 > 0, 0 < a < 1, M0 >= 1, zeta >= 0")
    return alpha0 / k**a, math.ceil(m0 * k**zeta)


# ---------------------------------------------------------------------------
# Monte-Carlo verification on a scalar point mass


@dataclass(frozen=True)
class ScalarPointMass:
    """1-D double integrator with a fixed Gaussian control policy."""

    horizon: int = 5
    dt: float = 0.1
    start_pos: float = 1.0
    start_vel: float = 0.0
    mean_control: float = 0.0
    control_std: float = 0.5
    pos_weight: float = 1.0
    vel_weight: float = 0.1
    control_weight: float = 0.1

    def sample_controls(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.mean_control + self.control_std * rng.standard_normal(
            (count, self.horizon)
        )

    def costs(self, controls: np.ndarray) -> np.ndarray:
        m = controls.shape[0]
        pos = np.full(m, self.start_pos)
        vel = np.full(m, self.start_vel)
        total = np.zeros(m)
        for t in range(self.horizon):
            vel = vel + self.dt * controls[:, t]
            pos = pos + self.dt * vel
            total += self.pos_weight * pos**2 + self.vel_weight * vel**2
            total += self.control_weight * controls[:, t] ** 2
        return total

    def sufficient_statistic(self, controls: np.ndarray) -> np.ndarray:
        """T(u) = u_0/σ, the fixed-variance Gaussian natural statistic."""
        return controls[:, 0] / self.control_std


_POINTWISE_KINDS = (ShapeKind.EXPONENTIAL, ShapeKind.TSALLIS_REPARAM, ShapeKind.INDICATOR)


def pointwise_shape_values(costs: np.ndarray, cfg: ShapeConfig) -> np.ndarray:
    """Per-sample S(-J) in [0,1] for shapes that are pointwise functions.

    Batch-adaptive shapes (normalized exponential, sigmoid with a batch
    quantile center, elite-fraction thresholds) have no per-sample value
    and are rejected.
    """
    if cfg.kind not in _POINTWISE_KINDS:
        raise ValueError(f"{cfg.kind.value} has no pointwise per-sample value")
    costs = np.asarray(costs, dtype=float)
    if cfg.kind is ShapeKind.EXPONENTIAL:
        return np.exp(-costs / cfg.lam)
    if cfg.gamma is None:
        raise ValueError("elite-fraction thresholds are batch-adaptive; fix gamma")
    if cfg.kind is ShapeKind.INDICATOR:
        return (costs <= cfg.gamma).astype(float)
    base = 1.0 - costs / cfg.gamma
    out = np.zeros_like(base)
    pos = base > 0
    out[pos] = np.exp(np.log(base[pos]) / (cfg.r - 1.0))
    return out


@dataclass
class ComplexityReport:
    """Everything measured by one bound-verification experiment."""

    shape_kind: str
    num_samples: int
    trials: int
    eps1: float
    eps2: float
    e1: float
    e2: float
    moments: MomentSet
    psi_value: float
    rho1: float
    rho2: float
    rho1_paper_literal: float
    theta_next_true: float
    interval_lower: float
    interval_upper: float
    freq1: float
    freq2: float
    containment_freq: float

    def __post_init__(self):
        if self.interval_lower > self.interval_upper:
            raise ValueError("interval endpoints out of order")

    @property
    def bounds_hold(self) -> bool:
        return bool(self.freq1 <= self.rho1 + 1e-12 and self.freq2 <= self.rho2 + 1e-12)

    def to_dict(self) -> dict:
        return {
            "shape_kind": self.shape_kind,
            "num_samples": int(self.num_samples),
            "trials": int(self.trials),
            "eps1": float(self.eps1),
            "eps2": float(self.eps2),
            "E1": float(self.e1),
            "E2": float(self.e2),
            "moments": [float(self.moments.m1), float(self.moments.m2),
                        float(self.moments.m3), float(self.moments.m4)],
            "psi": float(self.psi_value),
            "rho1": float(self.rho1),
            "rho2": float(self.rho2),
            "rho1_paper_literal": float(self.rho1_paper_literal),
            "theta_next_true": float(self.theta_next_true),
            "interval": [float(self.interval_lower), float(self.interval_upper)],
            "freq1": float(self.freq1),
            "freq2": float(self.freq2),
            "containment_freq": float(self.containment_freq),
            "bounds_hold": self.bounds_hold,
        }


def verify_bounds_mc(
    problem: ScalarPointMass,
    shape: ShapeConfig,
    num_samples: int,
    trials: int,
    eps1: float,
    eps2: float,
    seed=0,
    oracle_samples: int = 1_000_000,
) -> ComplexityReport:
    """Measure estimator-deviation frequencies against (ρ1, ρ2).

    Ground truth E1, E2 and the statistic moments come from a large-sample
    oracle; each of the ``trials`` independent M-sample batches then
    records whether |Ê1-E1| ≥ ε1 (Ê1 the empirical mean of S) and
    |Ê2-E2| ≥ ε2 (Ê2 the E1-normalized empirical mean of Sφ), plus whether
    the actual ratio-estimator update landed inside the predicted interval.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    oracle_ss, trial_ss = root.spawn(2)

    oracle_rng = np.random.default_rng(oracle_ss)
    controls = problem.sample_controls(oracle_rng, oracle_samples)
    costs = problem.costs(controls)
    stat = problem.sufficient_statistic(controls)
    s_vals = pointwise_shape_values(costs, shape)

    moments = MomentSet.from_samples(stat)
    e1 = float(s_vals.mean())
    phi = stat - moments.m1
    e2 = float((s_vals * phi).mean() / e1)

    rho1, rho2 = risk_bounds(eps1, eps2, num_samples, e1, moments)
    theta_next_true = moments.m1 + e2
    lower, upper = update_error_interval(theta_next_true, e1, e2, eps1, eps2)

    trial_rng = np.random.default_rng(trial_ss)
    viol1 = viol2 = contained = 0
    for _ in range(trials):
        c = problem.sample_controls(trial_rng, num_samples)
        j = problem.costs(c)
        s = pointwise_shape_values(j, shape)
        t_stat = problem.sufficient_statistic(c)
        p = t_stat - moments.m1
        e1_hat = s.mean()
        e2_hat = (s * p).mean() / e1
        viol1 += bool(abs(e1_hat - e1) >= eps1)
        viol2 += bool(abs(e2_hat - e2) >= eps2)
        s_sum = s.sum()
        if s_sum > 0:
            theta_hat = moments.m1 + (s * p).sum() / s_sum
            contained += bool(lower <= theta_hat <= upper)

    return ComplexityReport(
        shape_kind=shape.kind.value,
        num_samples=num_samples,
        trials=trials,
        eps1=eps1,
        eps2=eps2,
        e1=e1,
        e2=e2,
        moments=moments,
        psi_value=psi(moments),
        rho1=rho1,
        rho2=rho2,
        rho1_paper_literal=paper_literal_rho1(eps1, num_samples),
        theta_next_true=theta_next_true,
        interval_lower=lower,
        interval_upper=upper,
        freq1=viol1 / trials,
        freq2=viol2 / trials,
        containment_freq=contained / trials,
    )

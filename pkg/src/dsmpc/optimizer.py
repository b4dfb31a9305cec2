"""Generic sampling-based trajectory optimizer.

One iteration: sample control trajectories from the policy, roll them out
through the dynamics, score each rollout with the augmented cost
(task + consensus Lagrangian + crash indicators), turn costs into weights,
and update the policy.  Two update modes are supported:

  projection   refit the policy to the weighted samples (weighted
               mean/covariance, weighted EM, or Stein particle flow)
  gradient_ss  additive natural-gradient step on a unimodal Gaussian mean,
               θ ← θ + α_k Σ_m w_m (u_m - ū)

Rollouts that leave the finite range are excluded from the batch and the
weights renormalized over the survivors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DegenerateWeights, RolloutDiverged
from .policies import (
    GaussianMixturePolicy,
    PolicyParameters,
    SteinPolicy,
    UnimodalGaussianPolicy,
    candidate_mean_controls,
    gmm_em_update,
    sample_controls,
    stein_update,
    ug_update,
)
from .shapes import ShapeConfig, ShapeKind, compute_weights


class UpdateMode(str, enum.Enum):
    PROJECTION = "projection"
    GRADIENT_SS = "gradient_ss"


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the inner sampling loop.

    The per-iteration step size and sample count follow the schedules
    α_k = step_size0 / k^step_exponent and M_k = ceil(M · k^sample_exponent)
    (k starts at 1; both default to constants for MPC use).
    """

    num_samples: int
    num_iterations: int
    horizon: int
    shape: ShapeConfig
    update_mode: UpdateMode = UpdateMode.PROJECTION
    step_size0: float = 1.0
    step_exponent: float = 0.5
    sample_exponent: float = 0.0
    crash_penalty: float = 1e3
    em_iters: int = 1
    smoothing: float = 1.0
    control_cost_correction: bool = False

    def __post_init__(self):
        if not isinstance(self.update_mode, UpdateMode):
            object.__setattr__(self, "update_mode", UpdateMode(self.update_mode))
        if self.num_samples < 2:
            raise ValueError("num_samples must be >= 2 for covariance updates")
        if self.num_iterations < 1:
            raise ValueError("num_iterations must be >= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not (self.step_size0 > 0):
            raise ValueError("step_size0 must be positive")
        if not (0 <= self.step_exponent < 1):
            raise ValueError("step_exponent must lie in [0, 1)")
        if self.sample_exponent < 0:
            raise ValueError("sample_exponent must be >= 0")


@dataclass
class LocalProblem:
    """One agent's (possibly consensus-augmented) rollout problem.

    ``step_fn`` propagates a batch of states one step; ``cost_fn`` maps
    batched (states, controls) to the task cost; ``violation_fn`` (if any)
    counts crash-indicator hits per trajectory.  The consensus reference
    (y_ref/z_ref with duals xi/gamma_dual and penalties mu/nu) covers
    states 1..T and controls 0..T-1; leave it None for plain problems.
    """

    step_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    x0: np.ndarray
    cost_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    horizon: int
    violation_fn: Callable[[np.ndarray], np.ndarray] | None = None
    crash_penalty: float = 0.0
    y_ref: np.ndarray | None = None
    z_ref: np.ndarray | None = None
    xi: np.ndarray | None = None
    gamma_dual: np.ndarray | None = None
    mu: float = 1.0
    nu: float = 1.0
    control_low: np.ndarray | None = None
    control_high: np.ndarray | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        for name in ("y_ref", "z_ref", "xi", "gamma_dual"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=float))
        if self.y_ref is not None and self.y_ref.shape[0] != self.horizon:
            raise ValueError("y_ref must cover states 1..T")
        if self.z_ref is not None and self.z_ref.shape[0] != self.horizon:
            raise ValueError("z_ref must cover controls 0..T-1")
        if (self.y_ref is not None or self.z_ref is not None) and not (
            self.mu > 0 and self.nu > 0
        ):
            raise ValueError("consensus penalties mu, nu must be positive")

    def clamp(self, controls: np.ndarray) -> np.ndarray:
        if self.control_low is None:
            return controls
        return np.clip(controls, self.control_low, self.control_high)


@dataclass
class TrajectoryPair:
    """A state trajectory (T+1, n_x) with the controls (T, n_u) that produced it."""

    states: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.controls = np.asarray(self.controls, dtype=float)
        if self.states.shape[0] != self.controls.shape[0] + 1:
            raise ValueError("states must have exactly one more step than controls")


@dataclass
class IterationDiagnostics:
    iteration: int
    num_samples: int
    min_cost: float
    mean_cost: float
    effective_sample_size: float
    degenerate_fallbacks: int
    diverged_samples: int


@dataclass
class OptimizeResult:
    policy: PolicyParameters
    trajectory: TrajectoryPair
    cost: float
    diagnostics: list[IterationDiagnostics] = field(default_factory=list)


# ---------------------------------------------------------------------------
# rollouts and costs


def rollout(step_fn, x0, controls) -> np.ndarray:
    """Propagate a single control trajectory; (T, n_u) -> states (T+1, n_x)."""
    x0 = np.asarray(x0, dtype=float)
    controls = np.asarray(controls, dtype=float)
    if not np.all(np.isfinite(controls)):
        raise ValueError("controls must be finite")
    states = np.empty((controls.shape[0] + 1, x0.shape[0]))
    states[0] = x0
    for t in range(controls.shape[0]):
        states[t + 1] = step_fn(states[t], controls[t])
        if not np.all(np.isfinite(states[t + 1])):
            raise RolloutDiverged(t + 1)
    return states


def rollout_batch(step_fn, x0, controls) -> tuple[np.ndarray, np.ndarray]:
    """Batched rollout; returns states (M, T+1, n_x) and a finite-mask (M,)."""
    controls = np.asarray(controls, dtype=float)
    m, horizon, _ = controls.shape
    x0 = np.asarray(x0, dtype=float)
    states = np.empty((m, horizon + 1, x0.shape[0]))
    states[:, 0] = x0
    with np.errstate(all="ignore"):
        for t in range(horizon):
            states[:, t + 1] = step_fn(states[:, t], controls[:, t])
    valid = np.isfinite(states).all(axis=(1, 2))
    return states, valid


def consensus_lagrangian(prob: LocalProblem, states: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """Augmented-Lagrangian consensus term, batched over leading dims.

    Σ_t (μ/2)||x_t - y_t + ξ_t/μ||² + (ν/2)||u_t - z_t + γ_t/ν||²
    """
    total = np.zeros(states.shape[:-2])
    if prob.y_ref is not None:
        dev = states[..., 1:, :] - prob.y_ref + prob.xi / prob.mu
        total = total + 0.5 * prob.mu * np.einsum("...ti,...ti->...", dev, dev)
    if prob.z_ref is not None:
        dev = controls - prob.z_ref + prob.gamma_dual / prob.nu
        total = total + 0.5 * prob.nu * np.einsum("...ti,...ti->...", dev, dev)
    return total


def _batched_cost(prob: LocalProblem, states: np.ndarray, controls: np.ndarray) -> np.ndarray:
    cost = np.asarray(prob.cost_fn(states, controls), dtype=float)
    cost = cost + consensus_lagrangian(prob, states, controls)
    if prob.violation_fn is not None and prob.crash_penalty != 0.0:
        cost = cost + prob.crash_penalty * np.asarray(prob.violation_fn(states), dtype=float)
    return cost


def augmented_cost(traj: TrajectoryPair, prob: LocalProblem) -> float:
    """Task cost plus consensus Lagrangian plus crash penalties for one trajectory."""
    if traj.controls.shape[0] != prob.horizon:
        raise ValueError("trajectory horizon does not match problem horizon")
    with np.errstate(all="ignore"):
        return float(_batched_cost(prob, traj.states[None], traj.controls[None])[0])


# ---------------------------------------------------------------------------
# the optimizer


def _control_cost_correction(policy: UnimodalGaussianPolicy, samples: np.ndarray, lam: float) -> np.ndarray:
    """Importance-sampling control-cost term (λ/2)Σ_t θ'Σ⁻¹θ + 2u'Σ⁻¹θ."""
    prec = np.linalg.inv(policy.covariances)               # (T, n, n)
    theta = policy.means
    quad = np.einsum("ti,tij,tj->", theta, prec, theta)
    cross = np.einsum("mti,tij,tj->m", samples, prec, theta)
    return 0.5 * lam * (quad + 2.0 * cross)


def _fallback_shape(shape: ShapeConfig) -> ShapeConfig:
    return ShapeConfig(kind=ShapeKind.NORMALIZED_EXPONENTIAL, lam=shape.lam)


def optimize(
    prob: LocalProblem,
    policy: PolicyParameters,
    cfg: OptimizerConfig,
    seed,
) -> OptimizeResult:
    """Run the full sample/rollout/weight/update loop and test the result.

    Deterministic given the seed.  Diverged rollouts are dropped from the
    batch before weighting; if a weight transform degenerates (all-zero
    weights) the iteration retries once with the normalized-exponential
    transform, which cannot degenerate on finite costs.
    """
    if getattr(policy, "horizon") != cfg.horizon:
        raise ValueError("policy horizon does not match optimizer config")
    if isinstance(policy, SteinPolicy):
        expected = policy.num_particles * policy.rollouts_per_particle
        if cfg.num_samples != expected or cfg.sample_exponent != 0.0:
            raise ValueError(
                f"stein policies need num_samples = L*S = {expected} and a constant schedule"
            )
    if cfg.update_mode is UpdateMode.GRADIENT_SS and not isinstance(policy, UnimodalGaussianPolicy):
        raise ValueError("gradient_ss updates support unimodal Gaussian policies only")

    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    iter_seeds = root.spawn(cfg.num_iterations)
    diagnostics: list[IterationDiagnostics] = []
    fallback = _fallback_shape(cfg.shape)

    for k in range(1, cfg.num_iterations + 1):
        m_k = math.ceil(cfg.num_samples * k**cfg.sample_exponent)
        alpha_k = cfg.step_size0 / k**cfg.step_exponent

        samples = sample_controls(policy, m_k, iter_seeds[k - 1])
        samples = prob.clamp(samples)
        states, valid = rollout_batch(prob.step_fn, prob.x0, samples)
        with np.errstate(all="ignore"):
            costs = _batched_cost(prob, states, samples)
            if cfg.control_cost_correction and isinstance(policy, UnimodalGaussianPolicy):
                costs = costs + _control_cost_correction(policy, samples, cfg.shape.lam)
        valid &= np.isfinite(costs)
        diverged = int(m_k - valid.sum())
        if not valid.any():
            raise DegenerateWeights(costs, "every sample diverged")

        fallbacks = 0
        try:
            w_valid = compute_weights(costs[valid], cfg.shape)
        except DegenerateWeights:
            fallbacks = 1
            w_valid = compute_weights(costs[valid], fallback)
        weights = np.zeros(m_k)
        weights[valid] = w_valid

        if cfg.update_mode is UpdateMode.GRADIENT_SS:
            batch_mean = samples[valid].mean(axis=0)
            drift = np.einsum("m,mtu->tu", weights, samples - batch_mean)
            policy = replace(policy, means=policy.means + alpha_k * drift)
        elif isinstance(policy, UnimodalGaussianPolicy):
            policy = ug_update(samples, weights, policy, smoothing=cfg.smoothing)
        elif isinstance(policy, GaussianMixturePolicy):
            policy, _ = gmm_em_update(samples, weights, policy, em_iters=cfg.em_iters)
        elif isinstance(policy, SteinPolicy):
            policy = stein_update(samples, weights, policy)
        else:  # pragma: no cover
            raise TypeError(f"unsupported policy type {type(policy)!r}")

        diagnostics.append(
            IterationDiagnostics(
                iteration=k,
                num_samples=m_k,
                min_cost=float(costs[valid].min()),
                mean_cost=float(costs[valid].mean()),
                effective_sample_size=float(1.0 / np.square(w_valid).sum()),
                degenerate_fallbacks=fallbacks,
                diverged_samples=diverged,
            )
        )

    traj, cost = test_policy(prob, policy)
    return OptimizeResult(policy=policy, trajectory=traj, cost=cost, diagnostics=diagnostics)


def test_policy(prob: LocalProblem, policy: PolicyParameters) -> tuple[TrajectoryPair, float]:
    """Deterministically execute the policy mean.

    Mixture policies execute the highest-weight mode; Stein policies
    execute the particle with the lowest augmented cost.
    """
    best: tuple[TrajectoryPair, float] | None = None
    for candidate in candidate_mean_controls(policy):
        controls = prob.clamp(candidate)
        states = rollout(prob.step_fn, prob.x0, controls)
        traj = TrajectoryPair(states=states, controls=controls)
        cost = augmented_cost(traj, prob)
        if best is None or cost < best[1]:
            best = (traj, cost)
    return best

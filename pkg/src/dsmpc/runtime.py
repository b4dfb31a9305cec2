"""Receding-horizon orchestration.

Distributed mode runs, per MPC step, L rounds of {every agent solves its
neighborhood problem with the sampling optimizer, perceptions are averaged
into global variables, duals accumulate disagreement}; each agent then
executes the first control of its own plan, the horizon recedes, and
neighborhoods are recomputed.  Centralized mode treats the whole fleet as
one joint system and runs the same sampling optimizer on it.

Phases within an ADMM round are bulk-synchronous: local solves read only
the previous round's published globals, so they may run concurrently; this
implementation executes them sequentially, which honors the same contract.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace
from dataclasses import replace as dc_replace

import numpy as np

from .admm import (
    AgentLocalState,
    GlobalConsensus,
    NeighborhoodMode,
    NeighborhoodSets,
    assemble_globals_view,
    compute_neighborhoods,
    consensus_residuals,
    dual_update,
    global_update,
    recede_and_remap,
)
from .dynamics import nominal_control, positions, step, step_unchecked
from .errors import DegenerateWeights, RolloutDiverged
from .optimizer import LocalProblem, OptimizerConfig, optimize, rollout
from .policies import (
    GaussianMixturePolicy,
    PolicyParameters,
    SteinPolicy,
    UnimodalGaussianPolicy,
    floor_covariance,
    refresh_covariance,
    shift_policy,
)
from .tasks import TaskSpec, obstacle_clearance, stage_costs, terminal_cost


class RunMode(str, enum.Enum):
    DISTRIBUTED = "distributed"
    CENTRALIZED = "centralized"


@dataclass(frozen=True)
class PolicyConfig:
    """How each agent's sampling distribution is built and warm-started.

    ``solve_cov_reset`` blends the covariance back toward its initial
    value before every local solve; without it the refit covariance
    collapses over consecutive ADMM rounds and the frozen sampler stops
    responding to dual pressure.  ``neighbor_std_scale`` shrinks the
    exploration noise on neighbor-perception control blocks, which carry
    no task cost of their own and only need fine adjustment around the
    consensus plan.
    """

    kind: str = "gaussian"               # gaussian | mixture | stein
    init_std: tuple[float, ...] | float = 1.0
    covariance_floor: float = 1e-6
    warm_start_blend: float = 0.5
    solve_cov_reset: float = 1.0
    first_round_scale: float = 1.0       # exploration boost for ADMM round 1
    anneal_decay: float = 0.75           # exploration decay across ADMM rounds
    anneal_floor: float = 0.1
    neighbor_std_scale: float = 0.5
    init_jitter: float = 0.1             # relative spread of initial modes/particles
    num_modes: int = 2                   # mixture
    num_particles: int = 4               # stein
    rollouts_per_particle: int = 8       # stein
    stein_step_size: float = 0.5
    bandwidth: float | str = "median"

    def __post_init__(self):
        if self.kind not in ("gaussian", "mixture", "stein"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not (0.0 <= self.solve_cov_reset <= 1.0 and 0.0 <= self.warm_start_blend <= 1.0):
            raise ValueError("covariance blend factors must lie in [0, 1]")
        if not (0.0 < self.anneal_decay <= 1.0 and 0.0 < self.anneal_floor <= 1.0):
            raise ValueError("anneal factors must lie in (0, 1]")
        if not (self.neighbor_std_scale > 0):
            raise ValueError("neighbor_std_scale must be positive")


@dataclass(frozen=True)
class RunConfig:
    task: TaskSpec
    optimizer: OptimizerConfig
    policy: PolicyConfig = PolicyConfig()
    mode: RunMode = RunMode.DISTRIBUTED
    mpc_steps: int | None = None         # default: task.mpc_steps
    admm_iters: int = 5
    consensus_mu: float = 5.0
    consensus_nu: float = 5.0
    neighborhood: NeighborhoodMode = NeighborhoodMode("distance_ball", radius=2.0)
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.mode, RunMode):
            object.__setattr__(self, "mode", RunMode(self.mode))
        if self.admm_iters < 1:
            raise ValueError("admm_iters must be >= 1")
        if not (self.consensus_mu > 0 and self.consensus_nu > 0):
            raise ValueError("consensus penalties must be positive")

    @property
    def steps(self) -> int:
        return self.task.mpc_steps if self.mpc_steps is None else self.mpc_steps


@dataclass
class RunRecord:
    """Executed closed-loop trajectory plus per-run accounting."""

    mode: str
    seed: int
    states: np.ndarray            # (T+1, N, n_x) executed states
    controls: np.ndarray          # (T, N, n_u) executed controls
    residuals: np.ndarray         # (T, L, 2) primal state/control residuals
    per_agent_cost: np.ndarray    # (N,) realized cost incl. crash penalties
    violations: int               # agent-step crash indicators over the run
    success: bool                 # no violation over the whole run
    step_wall_clock: np.ndarray   # (T,) seconds per MPC step
    aborted: bool = False
    abort_reason: str = ""


# ---------------------------------------------------------------------------
# problem assembly


def _stacked_step(model, num_blocks: int):
    n_x, n_u = model.n_x, model.n_u

    def step_fn(x, u):
        xs = np.asarray(x)
        shape = xs.shape[:-1]
        xb = xs.reshape(*shape, num_blocks, n_x)
        ub = np.asarray(u).reshape(*shape, num_blocks, n_u)
        return step_unchecked(model, xb, ub).reshape(*shape, num_blocks * n_x)

    return step_fn


def _violation_counts(task: TaskSpec, block_ids, states: np.ndarray, all_pairs: bool) -> np.ndarray:
    """Crash-indicator count per trajectory, batched over leading dims.

    Per timestep t >= 1 and per scoped agent: one indicator for a strict
    obstacle violation and one for being strictly inside the collision
    radius of any other block.  ``all_pairs=False`` scopes to the first
    (ego) block only, which is the neighborhood-problem convention.
    """
    model = task.model
    b = len(block_ids)
    pos = positions(model, states.reshape(*states.shape[:-1], b, model.n_x))[..., 1:, :, :]
    counts = np.zeros(states.shape[:-2], dtype=float)
    scoped = range(b) if all_pairs else (0,)
    r = task.collision_radius
    for a in scoped:
        obs = obstacle_clearance(task, pos[..., a, :]) < 0.0
        counts += obs.sum(axis=-1)
        if b > 1:
            others = [j for j in range(b) if j != a]
            d = np.linalg.norm(pos[..., a, None, :] - pos[..., others, :], axis=-1)
            counts += (d < r).any(axis=-1).sum(axis=-1)
    return counts


def _joint_cost_fn(task: TaskSpec, block_ids):
    model = task.model
    n_x, n_u = model.n_x, model.n_u

    def cost_fn(states, controls):
        total = np.zeros(states.shape[:-2])
        for slot, agent in enumerate(block_ids):
            xs = states[..., slot * n_x : (slot + 1) * n_x]
            us = controls[..., slot * n_u : (slot + 1) * n_u]
            total = total + stage_costs(task, agent, xs[..., :-1, :], us).sum(axis=-1)
            total = total + terminal_cost(task, agent, xs[..., -1, :])
        return total

    return cost_fn


def _ego_cost_fn(task: TaskSpec, agent: int):
    model = task.model
    n_x, n_u = model.n_x, model.n_u

    def cost_fn(states, controls):
        xs = states[..., :n_x]
        us = controls[..., :n_u]
        total = stage_costs(task, agent, xs[..., :-1, :], us).sum(axis=-1)
        return total + terminal_cost(task, agent, xs[..., -1, :])

    return cost_fn


def _control_bounds(model, num_blocks: int):
    if model.control_limits is None:
        return None, None
    low = np.tile(model.control_limits[:, 0], num_blocks)
    high = np.tile(model.control_limits[:, 1], num_blocks)
    return low, high


def build_local_problem(
    task: TaskSpec,
    agent: int,
    block_ids: tuple[int, ...],
    x0: np.ndarray,
    crash_penalty: float,
    y_view: np.ndarray | None = None,
    z_view: np.ndarray | None = None,
    xi: np.ndarray | None = None,
    gamma_dual: np.ndarray | None = None,
    mu: float = 1.0,
    nu: float = 1.0,
) -> LocalProblem:
    """Neighborhood problem for one agent: own task cost, ego-scoped
    crash indicators, and the consensus Lagrangian over all blocks."""
    model = task.model
    low, high = _control_bounds(model, len(block_ids))
    return LocalProblem(
        step_fn=_stacked_step(model, len(block_ids)),
        x0=x0,
        cost_fn=_ego_cost_fn(task, agent),
        horizon=task.horizon,
        violation_fn=lambda s: _violation_counts(task, block_ids, s, all_pairs=False),
        crash_penalty=crash_penalty,
        y_ref=y_view, z_ref=z_view, xi=xi, gamma_dual=gamma_dual, mu=mu, nu=nu,
        control_low=low, control_high=high,
    )


def build_centralized_problem(task: TaskSpec, x0: np.ndarray, crash_penalty: float) -> LocalProblem:
    """The whole fleet as one joint sampling problem with all-pairs collisions."""
    block_ids = tuple(range(task.num_agents))
    low, high = _control_bounds(task.model, task.num_agents)
    return LocalProblem(
        step_fn=_stacked_step(task.model, task.num_agents),
        x0=np.asarray(x0, dtype=float).reshape(-1),
        cost_fn=_joint_cost_fn(task, block_ids),
        horizon=task.horizon,
        violation_fn=lambda s: _violation_counts(task, block_ids, s, all_pairs=True),
        crash_penalty=crash_penalty,
        control_low=low, control_high=high,
    )


# ---------------------------------------------------------------------------
# policies


def _init_cov(policy_cfg: PolicyConfig, n_u: int, num_blocks: int, ego_all: bool) -> np.ndarray:
    """Block-diagonal initial covariance over the augmented control space.

    Neighbor-perception blocks get their stds scaled by neighbor_std_scale
    unless every block carries task cost (centralized joint problems).
    """
    std = np.broadcast_to(np.atleast_1d(np.asarray(policy_cfg.init_std, dtype=float)), (n_u,))
    blocks = []
    for b in range(num_blocks):
        scale = 1.0 if (ego_all or b == 0) else policy_cfg.neighbor_std_scale
        blocks.append(np.diag(np.square(scale * std)))
    width = num_blocks * n_u
    cov = np.zeros((width, width))
    for b, blk in enumerate(blocks):
        cov[b * n_u : (b + 1) * n_u, b * n_u : (b + 1) * n_u] = blk
    return cov


def make_policy(
    policy_cfg: PolicyConfig,
    model,
    num_blocks: int,
    horizon: int,
    seed,
    ego_all: bool = False,
) -> PolicyParameters:
    """Fresh policy over the augmented control space of ``num_blocks`` agents."""
    n_u = model.n_u
    width = num_blocks * n_u
    rng = np.random.default_rng(seed)
    mean = np.tile(nominal_control(model), num_blocks)
    means = np.tile(mean, (horizon, 1))
    cov = _init_cov(policy_cfg, n_u, num_blocks, ego_all)
    std = np.sqrt(np.diag(cov))
    jitter = policy_cfg.init_jitter * std

    if policy_cfg.kind == "gaussian":
        covs = np.tile(cov, (horizon, 1, 1))
        return UnimodalGaussianPolicy(
            means=means, covariances=covs,
            covariance_floor=policy_cfg.covariance_floor, reset_cov=cov,
        )
    if policy_cfg.kind == "mixture":
        L = policy_cfg.num_modes
        mode_means = means[None] + jitter * rng.standard_normal((L, horizon, width))
        covs = np.tile(cov, (L, horizon, 1, 1))
        return GaussianMixturePolicy(
            mixture_weights=np.full(L, 1.0 / L), means=mode_means, covariances=covs,
            covariance_floor=policy_cfg.covariance_floor, reset_cov=cov,
        )
    L = policy_cfg.num_particles
    particles = means[None] + jitter * rng.standard_normal((L, horizon, width))
    return SteinPolicy(
        particles=particles, rollout_cov=cov,
        step_size=policy_cfg.stein_step_size,
        rollouts_per_particle=policy_cfg.rollouts_per_particle,
        bandwidth=policy_cfg.bandwidth,
    )


def _remap_gaussian_blocks(means, cov, old_ids, new_ids, n_u, fill_means, init_cov):
    """Rebuild (T, B·n_u) means and (T, ., .) covariances for new membership."""
    horizon = means.shape[0]
    b_new = len(new_ids)
    new_means = np.empty((horizon, b_new * n_u))
    new_cov = np.zeros((horizon, b_new * n_u, b_new * n_u))
    for s_new, j in enumerate(new_ids):
        dst = slice(s_new * n_u, (s_new + 1) * n_u)
        if j in old_ids:
            src = old_ids.index(j)
            new_means[:, dst] = means[:, src * n_u : (src + 1) * n_u]
        else:
            new_means[:, dst] = fill_means[j]
    for s_a, a in enumerate(new_ids):
        for s_b, b in enumerate(new_ids):
            da = slice(s_a * n_u, (s_a + 1) * n_u)
            db = slice(s_b * n_u, (s_b + 1) * n_u)
            if a in old_ids and b in old_ids:
                sa, sb = old_ids.index(a), old_ids.index(b)
                new_cov[:, da, db] = cov[:, sa * n_u : (sa + 1) * n_u, sb * n_u : (sb + 1) * n_u]
            elif s_a == s_b:
                new_cov[:, da, db] = init_cov[da, db]
    return new_means, new_cov


def remap_policy_blocks(
    policy: PolicyParameters,
    old_ids: tuple[int, ...],
    new_ids: tuple[int, ...],
    n_u: int,
    fill_means: dict[int, np.ndarray],
    init_cov: np.ndarray,
) -> PolicyParameters:
    """Carry the policy across a neighborhood-membership change.

    Blocks of persisting agents keep their means and covariance
    sub-blocks; entrants start from the consensus plan in ``fill_means``
    with the initial block covariance and no cross-correlations.
    """
    if old_ids == new_ids:
        return policy
    if isinstance(policy, UnimodalGaussianPolicy):
        means, cov = _remap_gaussian_blocks(
            policy.means, policy.covariances, old_ids, new_ids, n_u, fill_means, init_cov
        )
        return UnimodalGaussianPolicy(
            means=means, covariances=floor_covariance(cov, policy.covariance_floor),
            covariance_floor=policy.covariance_floor, reset_cov=init_cov,
        )
    if isinstance(policy, GaussianMixturePolicy):
        per_mode = [
            _remap_gaussian_blocks(
                policy.means[l], policy.covariances[l], old_ids, new_ids, n_u,
                fill_means, init_cov,
            )
            for l in range(policy.num_modes)
        ]
        means = np.stack([m for m, _ in per_mode])
        cov = np.stack([c for _, c in per_mode])
        return GaussianMixturePolicy(
            mixture_weights=policy.mixture_weights,
            means=means, covariances=floor_covariance(cov, policy.covariance_floor),
            covariance_floor=policy.covariance_floor, reset_cov=init_cov,
        )
    if isinstance(policy, SteinPolicy):
        horizon = policy.horizon
        b_new = len(new_ids)
        particles = np.empty((policy.num_particles, horizon, b_new * n_u))
        for s_new, j in enumerate(new_ids):
            dst = slice(s_new * n_u, (s_new + 1) * n_u)
            if j in old_ids:
                src = old_ids.index(j)
                particles[:, :, dst] = policy.particles[:, :, src * n_u : (src + 1) * n_u]
            else:
                particles[:, :, dst] = fill_means[j][None]
        return replace(policy, particles=particles, rollout_cov=init_cov.copy())
    raise TypeError(f"unsupported policy type {type(policy)!r}")


# ---------------------------------------------------------------------------
# violation accounting shared by run() and realized_cost()


def violation_table(task: TaskSpec, states: np.ndarray) -> np.ndarray:
    """Per-agent crash-indicator counts over executed states (T+1, N, n_x).

    Counts, for every agent and every post-initial step, one indicator for
    a strict obstacle violation and one for colliding with any other
    agent.  Returns an (N,) integer vector.
    """
    steps = states.shape[0] - 1
    n = states.shape[1]
    counts = np.zeros(n, dtype=int)
    for t in range(1, steps + 1):
        pos = positions(task.model, states[t])
        clear = obstacle_clearance(task, pos)
        for a in range(n):
            hit = clear[a] < 0.0
            collide = False
            for bidx in range(n):
                if bidx != a and np.linalg.norm(pos[a] - pos[bidx]) < task.collision_radius:
                    collide = True
                    break
            counts[a] += int(hit) + int(collide)
    return counts


def realized_cost(record: RunRecord, task: TaskSpec) -> np.ndarray:
    """Per-agent executed cost: stage costs over the run plus the crash
    penalty per recorded violation indicator."""
    n = record.states.shape[1]
    costs = np.empty(n)
    for a in range(n):
        costs[a] = stage_costs(task, a, record.states[:-1, a], record.controls[:, a]).sum()
    costs += task.crash_penalty * violation_table(task, record.states)
    return costs


# ---------------------------------------------------------------------------
# the run loop


def _policy_seed(config: RunConfig, tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=config.seed, spawn_key=(0xBEEF, tag))


def _solve_seed(config: RunConfig, t: int, admm_iter: int, agent: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=config.seed, spawn_key=(t, admm_iter, agent))


def _abort_record(config, states, controls, residuals, clocks, t, reason) -> RunRecord:
    task = config.task
    n = task.num_agents
    executed_states = np.array(states[: t + 1])
    executed_controls = (
        np.array(controls[:t]) if t else np.zeros((0, n, task.model.n_u))
    )
    rec = RunRecord(
        mode=config.mode.value, seed=config.seed,
        states=executed_states, controls=executed_controls,
        residuals=np.array(residuals) if residuals else np.zeros((0, config.admm_iters, 2)),
        per_agent_cost=np.full(n, np.inf),
        violations=0, success=False,
        step_wall_clock=np.array(clocks[:t]) if t else np.zeros(0),
        aborted=True, abort_reason=reason,
    )
    if t:
        viol = violation_table(task, rec.states)
        rec.violations = int(viol.sum())
        rec.per_agent_cost = realized_cost(rec, task)
    return rec


def run(config: RunConfig) -> RunRecord:
    """Execute the full MPC loop and return the closed-loop record."""
    if config.mode is RunMode.CENTRALIZED:
        return _run_centralized(config)
    return _run_distributed(config)


def _run_centralized(config: RunConfig) -> RunRecord:
    task = config.task
    model = task.model
    n = task.num_agents
    steps = config.steps
    x = task.starts.copy()

    policy = make_policy(config.policy, model, n, task.horizon, _policy_seed(config, 0),
                         ego_all=True)
    states_log = [x.copy()]
    controls_log: list[np.ndarray] = []
    clocks: list[float] = []

    for t in range(steps):
        tic = time.perf_counter()
        prob = build_centralized_problem(task, x.reshape(-1), config.optimizer.crash_penalty)
        policy = refresh_covariance(policy, config.policy.solve_cov_reset)
        try:
            result = optimize(prob, policy, config.optimizer, _solve_seed(config, t, 0, 0))
        except (DegenerateWeights, RolloutDiverged) as err:
            return _abort_record(config, states_log, controls_log, [], clocks, t, str(err))
        policy = result.policy
        u_joint = result.trajectory.controls[0].reshape(n, model.n_u)
        try:
            x = np.stack([step(model, x[a], u_joint[a]) for a in range(n)])
        except ValueError as err:
            return _abort_record(config, states_log, controls_log, [], clocks, t, str(err))
        states_log.append(x.copy())
        controls_log.append(u_joint)
        policy = shift_policy(policy, config.policy.warm_start_blend)
        clocks.append(time.perf_counter() - tic)

    return _finish_record(config, states_log, controls_log,
                          np.zeros((steps, 0, 2)), clocks)


def _run_distributed(config: RunConfig) -> RunRecord:
    task = config.task
    model = task.model
    n = task.num_agents
    steps = config.steps
    n_x, n_u = model.n_x, model.n_u
    horizon = task.horizon
    mu, nu = config.consensus_mu, config.consensus_nu
    single_step = lambda xs, us: step_unchecked(model, xs, us)

    x = task.starts.copy()
    sets = compute_neighborhoods(positions(model, x), config.neighborhood)

    # Initial plans: nominal controls rolled out from the starts; globals
    # coincide with the plans and duals start at zero.
    u_nom = np.tile(nominal_control(model), (horizon, 1))
    init_states = np.empty((n, horizon, n_x))
    for a in range(n):
        init_states[a] = rollout(single_step, x[a], u_nom)[1:]
    consensus = GlobalConsensus(y=init_states.copy(), z=np.tile(u_nom, (n, 1, 1)))

    locals_: list[AgentLocalState] = []
    for i in range(n):
        ids = (i, *sets.out_sets[i])
        locals_.append(
            AgentLocalState(
                agent=i, neighbors=sets.out_sets[i],
                states=np.concatenate([init_states[j] for j in ids], axis=1),
                controls=np.concatenate([consensus.z[j] for j in ids], axis=1),
                xi=np.zeros((horizon, len(ids) * n_x)),
                gamma=np.zeros((horizon, len(ids) * n_u)),
                mu=mu, nu=nu,
            )
        )

    policies: list[PolicyParameters] = [
        make_policy(config.policy, model, 1 + len(sets.out_sets[i]), horizon,
                    _policy_seed(config, i))
        for i in range(n)
    ]

    states_log = [x.copy()]
    controls_log: list[np.ndarray] = []
    residual_log: list[np.ndarray] = []
    clocks: list[float] = []

    for t in range(steps):
        tic = time.perf_counter()
        rows = np.empty((config.admm_iters, 2))
        views = [assemble_globals_view(i, consensus, sets) for i in range(n)]
        x0s = [
            np.concatenate([x[j] for j in (i, *sets.out_sets[i])])
            for i in range(n)
        ]
        try:
            for l in range(config.admm_iters):
                # Round 1 re-explores at full width with an undamped refit
                # (fresh inner-solver initialization); later rounds anneal
                # the exploration and damp the refit so consensus settles.
                if l == 0:
                    opt_cfg = dc_replace(config.optimizer, smoothing=1.0)
                    scale = config.policy.first_round_scale
                else:
                    opt_cfg = config.optimizer
                    scale = max(config.policy.anneal_decay**l, config.policy.anneal_floor)
                for i in range(n):
                    y_view, z_view = views[i]
                    prob = build_local_problem(
                        task, i, locals_[i].block_ids, x0s[i],
                        config.optimizer.crash_penalty,
                        y_view=y_view, z_view=z_view,
                        xi=locals_[i].xi, gamma_dual=locals_[i].gamma,
                        mu=mu, nu=nu,
                    )
                    policies[i] = refresh_covariance(
                        policies[i], config.policy.solve_cov_reset, scale
                    )
                    result = optimize(prob, policies[i], opt_cfg,
                                      _solve_seed(config, t, l, i))
                    policies[i] = result.policy
                    locals_[i] = replace(
                        locals_[i],
                        states=result.trajectory.states[1:],
                        controls=result.trajectory.controls,
                    )
                consensus = global_update(locals_, sets)
                views = [assemble_globals_view(i, consensus, sets) for i in range(n)]
                locals_ = [
                    dual_update(locals_[i], *views[i]) for i in range(n)
                ]
                rows[l] = consensus_residuals(locals_, consensus, sets)
        except (DegenerateWeights, RolloutDiverged) as err:
            return _abort_record(config, states_log, controls_log, residual_log, clocks, t, str(err))

        u_exec = np.stack([locals_[i].control_block(i)[0] for i in range(n)])
        try:
            x = np.stack([step(model, x[a], u_exec[a]) for a in range(n)])
        except ValueError as err:
            return _abort_record(config, states_log, controls_log, residual_log, clocks, t, str(err))
        states_log.append(x.copy())
        controls_log.append(u_exec)
        residual_log.append(rows)

        new_sets = compute_neighborhoods(positions(model, x), config.neighborhood)
        old_out = [ls.block_ids for ls in locals_]
        locals_, consensus = recede_and_remap(locals_, consensus, sets, new_sets, single_step)
        for i in range(n):
            policies[i] = shift_policy(policies[i], config.policy.warm_start_blend)
            new_ids = (i, *new_sets.out_sets[i])
            if new_ids != old_out[i]:
                fill = {j: consensus.z[j] for j in new_ids if j not in old_out[i]}
                init_cov = _init_cov(config.policy, n_u, len(new_ids), ego_all=False)
                policies[i] = remap_policy_blocks(
                    policies[i], old_out[i], new_ids, n_u, fill, init_cov
                )
        sets = new_sets
        clocks.append(time.perf_counter() - tic)

    residuals = (
        np.array(residual_log) if residual_log else np.zeros((0, config.admm_iters, 2))
    )
    return _finish_record(config, states_log, controls_log, residuals, clocks)


def _finish_record(config, states_log, controls_log, residuals, clocks) -> RunRecord:
    task = config.task
    states = np.array(states_log)
    controls = (
        np.array(controls_log)
        if controls_log
        else np.zeros((0, task.num_agents, task.model.n_u))
    )
    record = RunRecord(
        mode=config.mode.value, seed=config.seed,
        states=states, controls=controls,
        residuals=residuals,
        per_agent_cost=np.zeros(task.num_agents),
        violations=0, success=True,
        step_wall_clock=np.asarray(clocks, dtype=float),
    )
    viol = violation_table(task, states)
    record.violations = int(viol.sum())
    record.success = record.violations == 0
    record.per_agent_cost = realized_cost(record, task)
    return record

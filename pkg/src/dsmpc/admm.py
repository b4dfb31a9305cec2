"""Consensus bookkeeping for the distributed decomposition.

Each agent keeps an augmented plan: its own state/control trajectory
stacked with a local copy ("perception") of every neighbor's, plus dual
variables of the same shape.  Global variables hold one consensus
trajectory per agent, computed by averaging all perceptions of that agent.

Block layout is always [self, then neighbors in ascending agent order];
trajectories cover states 1..T and controls 0..T-1 of the prediction
horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class NeighborhoodMode:
    """Distance-ball (all agents within ``radius``) or fixed-size (k closest)."""

    kind: str                       # "distance_ball" | "fixed_size"
    radius: float | None = None
    size: int | None = None

    def __post_init__(self):
        if self.kind == "distance_ball":
            if self.radius is None or self.radius < 0:
                raise ValueError("distance_ball mode needs a radius >= 0")
        elif self.kind == "fixed_size":
            if self.size is None or self.size < 0:
                raise ValueError("fixed_size mode needs size >= 0")
        else:
            raise ValueError(f"unknown neighborhood kind {self.kind!r}")


@dataclass
class NeighborhoodSets:
    """Out-neighborhoods N_i and the derived in-sets M_i = {j : i ∈ N_j}."""

    out_sets: list[tuple[int, ...]]
    in_sets: list[tuple[int, ...]]

    def __post_init__(self):
        n = len(self.out_sets)
        if len(self.in_sets) != n:
            raise ValueError("out_sets and in_sets must have equal length")
        for i, nbrs in enumerate(self.out_sets):
            if i in nbrs:
                raise ValueError(f"agent {i} cannot neighbor itself")
            if tuple(sorted(nbrs)) != tuple(nbrs):
                raise ValueError("neighbor tuples must be sorted")
        derived = _transpose_sets(self.out_sets)
        if derived != [tuple(s) for s in self.in_sets]:
            raise ValueError("in_sets are not the transpose of out_sets")

    @property
    def num_agents(self) -> int:
        return len(self.out_sets)


def _transpose_sets(out_sets) -> list[tuple[int, ...]]:
    n = len(out_sets)
    members: list[list[int]] = [[] for _ in range(n)]
    for i, nbrs in enumerate(out_sets):
        for j in nbrs:
            members[j].append(i)
    return [tuple(sorted(m)) for m in members]


def compute_neighborhoods(agent_positions: np.ndarray, mode: NeighborhoodMode) -> NeighborhoodSets:
    """Neighborhoods from current agent positions (N, d).

    Fixed-size mode picks the k nearest agents with ties broken by
    ascending agent index; k must be < N.
    """
    pos = np.atleast_2d(np.asarray(agent_positions, dtype=float))
    n = pos.shape[0]
    diff = pos[:, None] - pos[None]
    dist = np.linalg.norm(diff, axis=-1)
    out_sets: list[tuple[int, ...]] = []
    if mode.kind == "distance_ball":
        for i in range(n):
            nbrs = [j for j in range(n) if j != i and dist[i, j] <= mode.radius]
            out_sets.append(tuple(nbrs))
    else:
        if mode.size >= n:
            raise ValueError(f"fixed-size neighborhood k={mode.size} must be < N={n}")
        for i in range(n):
            order = sorted((dist[i, j], j) for j in range(n) if j != i)
            out_sets.append(tuple(sorted(j for _, j in order[: mode.size])))
    return NeighborhoodSets(out_sets=out_sets, in_sets=_transpose_sets(out_sets))


@dataclass
class AgentLocalState:
    """Augmented local plan and duals for one agent's neighborhood problem."""

    agent: int
    neighbors: tuple[int, ...]          # sorted
    states: np.ndarray                  # (T, B*n_x), blocks [self; neighbors]
    controls: np.ndarray                # (T, B*n_u)
    xi: np.ndarray                      # (T, B*n_x) state duals
    gamma: np.ndarray                   # (T, B*n_u) control duals
    mu: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and self.nu > 0):
            raise ValueError("penalty parameters mu, nu must be positive")
        self.neighbors = tuple(sorted(self.neighbors))
        for name in ("states", "controls", "xi", "gamma"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.xi.shape != self.states.shape or self.gamma.shape != self.controls.shape:
            raise ValueError("dual shapes must match the augmented trajectories")
        b = self.num_blocks
        if self.states.shape[1] % b or self.controls.shape[1] % b:
            raise ValueError("trajectory width must split evenly into blocks")

    @property
    def num_blocks(self) -> int:
        return 1 + len(self.neighbors)

    @property
    def block_ids(self) -> tuple[int, ...]:
        return (self.agent, *self.neighbors)

    @property
    def n_x(self) -> int:
        return self.states.shape[1] // self.num_blocks

    @property
    def n_u(self) -> int:
        return self.controls.shape[1] // self.num_blocks

    def _slot(self, agent_id: int) -> int:
        try:
            return self.block_ids.index(agent_id)
        except ValueError:
            raise KeyError(f"agent {agent_id} has no block in agent {self.agent}'s plan")

    def state_block(self, agent_id: int) -> np.ndarray:
        s = self._slot(agent_id)
        return self.states[:, s * self.n_x : (s + 1) * self.n_x]

    def control_block(self, agent_id: int) -> np.ndarray:
        s = self._slot(agent_id)
        return self.controls[:, s * self.n_u : (s + 1) * self.n_u]

    def xi_block(self, agent_id: int) -> np.ndarray:
        s = self._slot(agent_id)
        return self.xi[:, s * self.n_x : (s + 1) * self.n_x]

    def gamma_block(self, agent_id: int) -> np.ndarray:
        s = self._slot(agent_id)
        return self.gamma[:, s * self.n_u : (s + 1) * self.n_u]


@dataclass
class GlobalConsensus:
    """Per-agent consensus trajectories."""

    y: np.ndarray                       # (N, T, n_x)
    z: np.ndarray                       # (N, T, n_u)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if self.y.shape[:2] != self.z.shape[:2]:
            raise ValueError("y and z must agree on (N, T)")


def global_update(local_states: list[AgentLocalState], sets: NeighborhoodSets) -> GlobalConsensus:
    """Average every perception of each agent (plus scaled duals) into y, z.

    y_i = (1/(|M_i|+1)) Σ_{j ∈ M_i ∪ {i}} (x^{ji} + ξ^{ji}/μ), same for z
    with γ/ν.
    """
    n = len(local_states)
    t = local_states[0].states.shape[0]
    n_x, n_u = local_states[0].n_x, local_states[0].n_u
    y = np.zeros((n, t, n_x))
    z = np.zeros((n, t, n_u))
    for i in range(n):
        contributors = (*sets.in_sets[i], i)
        for j in contributors:
            lj = local_states[j]
            y[i] += lj.state_block(i) + lj.xi_block(i) / lj.mu
            z[i] += lj.control_block(i) + lj.gamma_block(i) / lj.nu
        y[i] /= len(contributors)
        z[i] /= len(contributors)
    return GlobalConsensus(y=y, z=z)


def assemble_globals_view(
    agent: int, consensus: GlobalConsensus, sets: NeighborhoodSets
) -> tuple[np.ndarray, np.ndarray]:
    """Stack [own; neighbors] consensus blocks, matching the local layout."""
    ids = (agent, *sets.out_sets[agent])
    y_view = np.concatenate([consensus.y[j] for j in ids], axis=1)
    z_view = np.concatenate([consensus.z[j] for j in ids], axis=1)
    return y_view, z_view


def dual_update(local: AgentLocalState, y_view: np.ndarray, z_view: np.ndarray) -> AgentLocalState:
    """ξ += μ(x̃ - ỹ), γ += ν(ũ - z̃); primals untouched."""
    if y_view.shape != local.states.shape or z_view.shape != local.controls.shape:
        raise ValueError("globals view does not match the local layout")
    return replace(
        local,
        xi=local.xi + local.mu * (local.states - y_view),
        gamma=local.gamma + local.nu * (local.controls - z_view),
    )


def consensus_residuals(
    local_states: list[AgentLocalState],
    consensus: GlobalConsensus,
    sets: NeighborhoodSets,
) -> tuple[float, float]:
    """Root-sum-square primal residuals (states, controls) over all agents."""
    sq_x = 0.0
    sq_u = 0.0
    for local in local_states:
        y_view, z_view = assemble_globals_view(local.agent, consensus, sets)
        sq_x += float(np.square(local.states - y_view).sum())
        sq_u += float(np.square(local.controls - z_view).sum())
    return float(np.sqrt(sq_x)), float(np.sqrt(sq_u))


def _shift_trajectory(arr: np.ndarray, tail: np.ndarray) -> np.ndarray:
    return np.concatenate([arr[1:], tail[None]], axis=0)


def recede_and_remap(
    local_states: list[AgentLocalState],
    consensus: GlobalConsensus,
    old_sets: NeighborhoodSets,
    new_sets: NeighborhoodSets,
    step_fn,
) -> tuple[list[AgentLocalState], GlobalConsensus]:
    """Shift the whole ADMM state one step and apply membership changes.

    Every trajectory drops its first entry; the new tail repeats the last
    control, propagates the last state through ``step_fn`` (a single-agent
    step, broadcast over blocks), and zero-pads duals.  Blocks of agents
    that left a neighborhood are dropped; new entrants start from the
    shifted global consensus with zero duals.  Global and dual updates are
    then re-run against the new membership.
    """
    n = len(local_states)
    n_x, n_u = local_states[0].n_x, local_states[0].n_u

    z_tail = consensus.z[:, -1]
    y_tail = step_fn(consensus.y[:, -1], z_tail)
    shifted = GlobalConsensus(
        y=np.concatenate([consensus.y[:, 1:], y_tail[:, None]], axis=1),
        z=np.concatenate([consensus.z[:, 1:], z_tail[:, None]], axis=1),
    )

    new_locals: list[AgentLocalState] = []
    for i in range(n):
        old = local_states[i]
        b = old.num_blocks
        last_u = old.controls[-1]
        last_x = old.states[-1]
        prop = step_fn(last_x.reshape(b, n_x), last_u.reshape(b, n_u)).reshape(-1)
        states = _shift_trajectory(old.states, prop)
        controls = _shift_trajectory(old.controls, last_u)
        xi = _shift_trajectory(old.xi, np.zeros(old.xi.shape[1]))
        gamma = _shift_trajectory(old.gamma, np.zeros(old.gamma.shape[1]))

        new_ids = (i, *new_sets.out_sets[i])
        t = states.shape[0]
        nstates = np.empty((t, len(new_ids) * n_x))
        ncontrols = np.empty((t, len(new_ids) * n_u))
        nxi = np.empty_like(nstates)
        ngamma = np.empty_like(ncontrols)
        old_ids = old.block_ids
        for slot, j in enumerate(new_ids):
            sx = slice(slot * n_x, (slot + 1) * n_x)
            su = slice(slot * n_u, (slot + 1) * n_u)
            if j in old_ids:
                k = old_ids.index(j)
                nstates[:, sx] = states[:, k * n_x : (k + 1) * n_x]
                ncontrols[:, su] = controls[:, k * n_u : (k + 1) * n_u]
                nxi[:, sx] = xi[:, k * n_x : (k + 1) * n_x]
                ngamma[:, su] = gamma[:, k * n_u : (k + 1) * n_u]
            else:
                nstates[:, sx] = shifted.y[j]
                ncontrols[:, su] = shifted.z[j]
                nxi[:, sx] = 0.0
                ngamma[:, su] = 0.0
        new_locals.append(
            AgentLocalState(
                agent=i, neighbors=new_sets.out_sets[i],
                states=nstates, controls=ncontrols, xi=nxi, gamma=ngamma,
                mu=old.mu, nu=old.nu,
            )
        )

    new_consensus = global_update(new_locals, new_sets)
    updated = []
    for local in new_locals:
        y_view, z_view = assemble_globals_view(local.agent, new_consensus, new_sets)
        updated.append(dual_update(local, y_view, z_view))
    return updated, new_consensus

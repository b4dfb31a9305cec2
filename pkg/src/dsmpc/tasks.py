"""Benchmark task definitions: goals, obstacles, collision constraints, scenarios.

A scenario fixes the fleet geometry (starts, goals, obstacles), the
dynamics model, quadratic cost weights, the inter-agent collision radius
and the crash penalty.  The paper-style tasks are generated procedurally
from a small set of geometry parameters so they can be pinned in config
files; the constraint convention is that boundary contact is feasible and
the crash indicator fires only on strict violation (distance < radius).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsKind, DynamicsModel, positions

SCENARIO_NAMES = (
    "point_mass",
    "narrow_crossing3",
    "dubins_swap",
    "dubins_formation",
    "quad_formation8",
    "scaling",
)


@dataclass
class TaskSpec:
    name: str
    model: DynamicsModel
    starts: np.ndarray                 # (N, n_x)
    goals: np.ndarray                  # (N, n_x)
    state_weight: np.ndarray           # Q, (n_x, n_x)
    control_weight: np.ndarray         # R, (n_u, n_u)
    terminal_weight: np.ndarray        # Q_f, (n_x, n_x)
    obstacles: np.ndarray              # (n_obs, 3): cx, cy, radius (cylinders for quads)
    collision_radius: float
    crash_penalty: float
    horizon: int                       # prediction horizon T'
    mpc_steps: int                     # MPC length T
    geometry: dict = field(default_factory=dict)

    def __post_init__(self):
        self.starts = np.atleast_2d(np.asarray(self.starts, dtype=float))
        self.goals = np.atleast_2d(np.asarray(self.goals, dtype=float))
        self.obstacles = np.asarray(self.obstacles, dtype=float).reshape(-1, 3)
        n_x, n_u = self.model.n_x, self.model.n_u
        if self.starts.shape[1] != n_x or self.goals.shape != self.starts.shape:
            raise ValueError("starts/goals must be (N, n_x) and consistent")
        self.state_weight = np.asarray(self.state_weight, dtype=float).reshape(n_x, n_x)
        self.control_weight = np.asarray(self.control_weight, dtype=float).reshape(n_u, n_u)
        self.terminal_weight = np.asarray(self.terminal_weight, dtype=float).reshape(n_x, n_x)
        if (self.obstacles.size and (self.obstacles[:, 2] <= 0).any()) or self.collision_radius <= 0:
            raise ValueError("radii must be positive")

    @property
    def num_agents(self) -> int:
        return self.starts.shape[0]


# ---------------------------------------------------------------------------
# costs


def task_cost(task: TaskSpec, agent: int, x: np.ndarray, u: np.ndarray) -> float:
    """Per-step quadratic goal-tracking plus control-effort cost."""
    err = np.asarray(x, dtype=float) - task.goals[agent]
    u = np.asarray(u, dtype=float)
    return float(err @ task.state_weight @ err + u @ task.control_weight @ u)


def stage_costs(task: TaskSpec, agent: int, states: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """Vectorized stage costs over (..., T, n_x) states and (..., T, n_u) controls."""
    err = states - task.goals[agent]
    cs = np.einsum("...i,ij,...j->...", err, task.state_weight, err)
    cu = np.einsum("...i,ij,...j->...", controls, task.control_weight, controls)
    return cs + cu


def terminal_cost(task: TaskSpec, agent: int, x: np.ndarray) -> np.ndarray:
    err = np.asarray(x, dtype=float) - task.goals[agent]
    return np.einsum("...i,ij,...j->...", err, task.terminal_weight, err)


# ---------------------------------------------------------------------------
# constraints


def obstacle_clearance(task: TaskSpec, pos: np.ndarray) -> np.ndarray:
    """Signed distance to the nearest obstacle surface, (...,).

    Obstacles are circles in the xy plane (infinite cylinders for aerial
    models).  Positive means clear of every obstacle; with no obstacles
    returns +inf.
    """
    pos = np.asarray(pos, dtype=float)
    if task.obstacles.shape[0] == 0:
        return np.full(pos.shape[:-1], np.inf)
    delta = pos[..., None, :2] - task.obstacles[:, :2]
    dist = np.linalg.norm(delta, axis=-1) - task.obstacles[:, 2]
    return dist.min(axis=-1)


def constraint_violations(task: TaskSpec, x_all: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Strict constraint violations for one joint state (N, n_x).

    Returns a boolean obstacle-hit flag per agent and the list of agent
    pairs (i < j) whose distance is strictly below the collision radius.
    Boundary contact (distance exactly equal) is feasible.
    """
    x_all = np.atleast_2d(np.asarray(x_all, dtype=float))
    pos = positions(task.model, x_all)
    obstacle_hit = obstacle_clearance(task, pos) < 0.0
    n = x_all.shape[0]
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pos[i] - pos[j]) < task.collision_radius:
                pairs.append((i, j))
    return obstacle_hit, pairs


# ---------------------------------------------------------------------------
# scenario generators


def _goal_state(model: DynamicsModel, xy, heading: float = 0.0, z: float | None = None):
    x = np.zeros(model.n_x)
    x[0], x[1] = xy
    if model.kind is DynamicsKind.DUBINS:
        x[2] = heading
    elif model.kind is DynamicsKind.QUADCOPTER12:
        x[2] = 1.0 if z is None else z
    return x


def _default_weights(model: DynamicsModel):
    n_x = model.n_x
    q = np.zeros(n_x)
    if model.kind is DynamicsKind.DOUBLE_INTEGRATOR_2D:
        q[:2] = 4.0
        q[2:] = 0.4
        r = np.full(model.n_u, 0.1)
    elif model.kind is DynamicsKind.DUBINS:
        q[:2] = 4.0
        r = np.array([0.1, 0.05])
    else:
        q[:3] = 4.0
        q[3:6] = 0.4
        q[6:9] = 1.0
        q[9:] = 0.1
        r = np.array([0.05, 0.5, 0.5, 0.5])
    return np.diag(q), np.diag(r), np.diag(5.0 * q)


def make_scenario(name: str, params: dict | None = None) -> TaskSpec:
    """Build one of the named benchmark scenarios.

    ``params`` overrides the scenario's geometry defaults; unknown keys
    are rejected so config typos fail loudly.
    """
    params = dict(params or {})
    if name not in SCENARIO_NAMES:
        raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIO_NAMES}")
    builder = globals()[f"_make_{name}"]
    return builder(params)


def _take(params: dict, defaults: dict) -> dict:
    unknown = set(params) - set(defaults)
    if unknown:
        raise ValueError(f"unknown scenario parameters: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(params)
    return merged


def _make_point_mass(params: dict) -> TaskSpec:
    g = _take(params, {
        "dt": 0.1, "span": 2.0, "obstacle_radius": 0.5, "obstacle_offset": 0.15,
        "accel_limit": 3.0, "crash_penalty": 2e3, "horizon": 25, "mpc_steps": 1,
    })
    model = DynamicsModel(
        DynamicsKind.DOUBLE_INTEGRATOR_2D, dt=g["dt"],
        control_limits=np.array([[-g["accel_limit"], g["accel_limit"]]] * 2),
    )
    start = np.array([-g["span"], 0.0, 0.0, 0.0])
    goal = np.array([g["span"], 0.0, 0.0, 0.0])
    Q, R, Qf = _default_weights(model)
    return TaskSpec(
        name="point_mass", model=model, starts=start[None], goals=goal[None],
        state_weight=Q, control_weight=R, terminal_weight=Qf,
        obstacles=np.array([[0.0, g["obstacle_offset"], g["obstacle_radius"]]]),
        collision_radius=0.3, crash_penalty=g["crash_penalty"],
        horizon=g["horizon"], mpc_steps=g["mpc_steps"], geometry=g,
    )


def _make_narrow_crossing3(params: dict) -> TaskSpec:
    # Two large circles leave a gap at the origin narrower than the
    # collision radius, so the three vehicles must pass one at a time.
    g = _take(params, {
        "dt": 0.1, "gap_width": 0.35, "wall_radius": 1.6, "approach": 2.6,
        "lane_spacing": 0.9, "start_stagger": 0.6, "collision_radius": 0.5,
        "speed_limit": 1.2, "turn_limit": 2.5, "crash_penalty": 1e3,
        "horizon": 22, "mpc_steps": 70,
    })
    model = DynamicsModel(
        DynamicsKind.DUBINS, dt=g["dt"],
        control_limits=np.array([[0.0, g["speed_limit"]],
                                 [-g["turn_limit"], g["turn_limit"]]]),
    )
    wall_y = g["gap_width"] / 2.0 + g["wall_radius"]
    obstacles = np.array([
        [0.0, wall_y, g["wall_radius"]],
        [0.0, -wall_y, g["wall_radius"]],
    ])
    lanes = np.array([-1.0, 0.0, 1.0]) * g["lane_spacing"]
    # staggered approach distances give the fleet a natural arrival order
    starts = np.stack([
        _goal_state(model, (-g["approach"] - i * g["start_stagger"], y))
        for i, y in enumerate(lanes)
    ])
    goals = np.stack([_goal_state(model, (g["approach"], y)) for y in lanes])
    Q, R, Qf = _default_weights(model)
    return TaskSpec(
        name="narrow_crossing3", model=model, starts=starts, goals=goals,
        state_weight=Q, control_weight=R, terminal_weight=Qf, obstacles=obstacles,
        collision_radius=g["collision_radius"], crash_penalty=g["crash_penalty"],
        horizon=g["horizon"], mpc_steps=g["mpc_steps"], geometry=g,
    )


def _make_dubins_swap(params: dict) -> TaskSpec:
    g = _take(params, {
        "dt": 0.1, "num_agents": 10, "circle_radius": 3.0,
        "obstacle_radius": 0.8, "obstacle_offset": (0.5, 0.2),
        "collision_radius": 0.4, "speed_limit": 1.2, "turn_limit": 2.5,
        "crash_penalty": 1e3, "horizon": 22, "mpc_steps": 90,
    })
    n = int(g["num_agents"])
    if n < 2 or n % 2:
        raise ValueError("dubins_swap needs an even number of agents >= 2")
    model = DynamicsModel(
        DynamicsKind.DUBINS, dt=g["dt"],
        control_limits=np.array([[0.0, g["speed_limit"]],
                                 [-g["turn_limit"], g["turn_limit"]]]),
    )
    angles = 2.0 * np.pi * np.arange(n) / n
    ring = g["circle_radius"] * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    starts = np.stack([
        _goal_state(model, ring[i], heading=angles[i] + np.pi) for i in range(n)
    ])
    # each agent heads for the starting point of the agent directly across
    goals = np.stack([
        _goal_state(model, ring[(i + n // 2) % n]) for i in range(n)
    ])
    ox, oy = g["obstacle_offset"]
    Q, R, Qf = _default_weights(model)
    return TaskSpec(
        name="dubins_swap", model=model, starts=starts, goals=goals,
        state_weight=Q, control_weight=R, terminal_weight=Qf,
        obstacles=np.array([[ox, oy, g["obstacle_radius"]]]),
        collision_radius=g["collision_radius"], crash_penalty=g["crash_penalty"],
        horizon=g["horizon"], mpc_steps=g["mpc_steps"], geometry=g,
    )


def _formation_layout(model, n, g):
    """Agents in rows on the left, mirrored target formation on the right,
    a wall of obstacles with single-agent gates along x = 0."""
    per_row = int(g["agents_per_row"])
    rows = int(np.ceil(n / per_row))
    ys = (np.arange(per_row) - (per_row - 1) / 2.0) * g["lane_spacing"]
    starts, goals = [], []
    for i in range(n):
        r, c = divmod(i, per_row)
        y = ys[c] + 0.0
        sx = -g["approach"] - r * g["row_spacing"]
        gx = g["approach"] + r * g["row_spacing"]
        starts.append(_goal_state(model, (sx, y)))
        goals.append(_goal_state(model, (gx, y)))
    num_gates = max(2, int(np.ceil(per_row / 2)))
    # wall segments between gates; gates sized to admit one agent
    gate_ys = (np.arange(num_gates) - (num_gates - 1) / 2.0) * (2.0 * g["gate_spacing"])
    wall_r = g["gate_spacing"] - g["gate_width"] / 2.0
    obstacles = [[0.0, gy + g["gate_spacing"], wall_r] for gy in gate_ys]
    obstacles += [[0.0, gate_ys[0] - g["gate_spacing"], wall_r]]
    return np.stack(starts), np.stack(goals), np.asarray(obstacles)


def _make_dubins_formation(params: dict) -> TaskSpec:
    g = _take(params, {
        "dt": 0.1, "num_agents": 12, "agents_per_row": 4, "lane_spacing": 0.9,
        "row_spacing": 0.9, "approach": 2.6, "gate_spacing": 0.9, "gate_width": 0.4,
        "collision_radius": 0.45, "speed_limit": 1.2, "turn_limit": 2.5,
        "crash_penalty": 1e3, "horizon": 22, "mpc_steps": 80,
    })
    n = int(g["num_agents"])
    if n < 1:
        raise ValueError("num_agents must be >= 1")
    model = DynamicsModel(
        DynamicsKind.DUBINS, dt=g["dt"],
        control_limits=np.array([[0.0, g["speed_limit"]],
                                 [-g["turn_limit"], g["turn_limit"]]]),
    )
    starts, goals, obstacles = _formation_layout(model, n, g)
    Q, R, Qf = _default_weights(model)
    return TaskSpec(
        name="dubins_formation", model=model, starts=starts, goals=goals,
        state_weight=Q, control_weight=R, terminal_weight=Qf, obstacles=obstacles,
        collision_radius=g["collision_radius"], crash_penalty=g["crash_penalty"],
        horizon=g["horizon"], mpc_steps=g["mpc_steps"], geometry=g,
    )


def _make_quad_formation8(params: dict) -> TaskSpec:
    g = _take(params, {
        "dt": 0.05, "num_agents": 8, "circle_radius": 2.0, "altitude": 1.0,
        "obstacle_radius": 0.7, "gap_width": 0.5, "collision_radius": 0.4,
        "thrust_limit": 18.0, "torque_limit": 0.15,
        "crash_penalty": 1e3, "horizon": 25, "mpc_steps": 80,
    })
    n = int(g["num_agents"])
    model = DynamicsModel(
        DynamicsKind.QUADCOPTER12, dt=g["dt"],
        control_limits=np.array(
            [[0.0, g["thrust_limit"]]] + [[-g["torque_limit"], g["torque_limit"]]] * 3
        ),
    )
    angles = 2.0 * np.pi * np.arange(n) / n
    ring = g["circle_radius"] * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    starts = np.stack([
        _goal_state(model, ring[i], z=g["altitude"]) for i in range(n)
    ])
    goals = np.stack([
        _goal_state(model, ring[(i + n // 2) % n], z=g["altitude"]) for i in range(n)
    ])
    off = g["gap_width"] / 2.0 + g["obstacle_radius"]
    obstacles = np.array([[0.0, off, g["obstacle_radius"]],
                          [0.0, -off, g["obstacle_radius"]]])
    Q, R, Qf = _default_weights(model)
    return TaskSpec(
        name="quad_formation8", model=model, starts=starts, goals=goals,
        state_weight=Q, control_weight=R, terminal_weight=Qf, obstacles=obstacles,
        collision_radius=g["collision_radius"], crash_penalty=g["crash_penalty"],
        horizon=g["horizon"], mpc_steps=g["mpc_steps"], geometry=g,
    )


def _make_scaling(params: dict) -> TaskSpec:
    g = _take(params, {
        "dt": 0.1, "num_agents": 12, "lane_spacing": 1.0, "row_spacing": 1.0,
        "approach": 2.4, "gate_spacing": 1.0, "gate_width": 0.5,
        "agents_per_row": 6, "collision_radius": 0.4, "speed_limit": 1.2,
        "turn_limit": 2.5, "crash_penalty": 1e3, "horizon": 20, "mpc_steps": 60,
    })
    n = int(g["num_agents"])
    if n < 1:
        raise ValueError("num_agents must be >= 1")
    g["agents_per_row"] = min(int(g["agents_per_row"]), n)
    model = DynamicsModel(
        DynamicsKind.DUBINS, dt=g["dt"],
        control_limits=np.array([[0.0, g["speed_limit"]],
                                 [-g["turn_limit"], g["turn_limit"]]]),
    )
    starts, goals, obstacles = _formation_layout(model, n, g)
    Q, R, Qf = _default_weights(model)
    return TaskSpec(
        name="scaling", model=model, starts=starts, goals=goals,
        state_weight=Q, control_weight=R, terminal_weight=Qf, obstacles=obstacles,
        collision_radius=g["collision_radius"], crash_penalty=g["crash_penalty"],
        horizon=g["horizon"], mpc_steps=g["mpc_steps"], geometry=g,
    )

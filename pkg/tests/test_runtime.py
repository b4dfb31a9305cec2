import numpy as np
import pytest

import dsmpc.runtime as runtime
from dsmpc.admm import NeighborhoodMode
from dsmpc.dynamics import DynamicsKind, DynamicsModel
from dsmpc.optimizer import OptimizerConfig
from dsmpc.runtime import (
    PolicyConfig,
    RunConfig,
    RunMode,
    make_policy,
    realized_cost,
    remap_policy_blocks,
    run,
    violation_table,
)
from dsmpc.shapes import ShapeConfig, ShapeKind
from dsmpc.tasks import TaskSpec, make_scenario


def small_config(mode="distributed", seed=0, scenario="point_mass", steps=3, **over):
    params = {"mpc_steps": steps, "horizon": 8}
    params.update(over.pop("scenario_params", {}))
    task = make_scenario(scenario, params)
    opt = OptimizerConfig(
        num_samples=16, num_iterations=2, horizon=task.horizon,
        shape=ShapeConfig(kind=ShapeKind.NORMALIZED_EXPONENTIAL, lam=0.3),
        crash_penalty=task.crash_penalty,
    )
    return RunConfig(
        task=task, optimizer=opt,
        policy=PolicyConfig(kind="gaussian", init_std=1.0),
        mode=mode, admm_iters=over.pop("admm_iters", 2), seed=seed,
        neighborhood=over.pop("neighborhood", NeighborhoodMode("distance_ball", radius=3.0)),
        **over,
    )


def test_run_is_bit_deterministic():
    cfg = small_config(scenario="narrow_crossing3", steps=2)
    a, b = run(cfg), run(cfg)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.controls, b.controls)
    assert np.array_equal(a.residuals, b.residuals)
    assert np.array_equal(a.per_agent_cost, b.per_agent_cost)


def test_zero_steps_is_trivial_success():
    cfg = small_config(steps=0)
    rec = run(cfg)
    assert rec.success
    assert rec.states.shape[0] == 1
    assert rec.controls.shape[0] == 0
    assert rec.per_agent_cost.tolist() == [0.0]


def test_centralized_single_agent_runs():
    rec = run(small_config(mode="centralized", steps=4))
    assert not rec.aborted
    assert rec.states.shape == (5, 1, 4)
    assert rec.residuals.shape[1] == 0


def test_success_iff_no_violations():
    rec = run(small_config(scenario="narrow_crossing3", steps=2))
    assert rec.success == (rec.violations == 0)


def test_single_agent_reduction_matches_centralized():
    base = dict(steps=5, admm_iters=1, consensus_mu=1e-100, consensus_nu=1e-100)
    dist = run(small_config(mode="distributed", seed=3, **base))
    cent = run(small_config(mode="centralized", seed=3, **base))
    assert np.abs(dist.states - cent.states).max() <= 1e-9
    assert np.abs(dist.controls - cent.controls).max() <= 1e-9


def test_membership_changes_are_handled():
    # swap brings agents together and apart under a distance-ball rule
    cfg = small_config(
        scenario="dubins_swap", steps=4,
        scenario_params={"num_agents": 4, "circle_radius": 1.4},
        neighborhood=NeighborhoodMode("distance_ball", radius=1.5),
    )
    rec = run(cfg)
    assert not rec.aborted
    again = run(cfg)
    assert np.array_equal(rec.states, again.states)


def test_executed_divergence_aborts_with_record(monkeypatch):
    calls = {"n": 0}
    original = runtime.step

    def sometimes_nan(model, x, u):
        calls["n"] += 1
        if calls["n"] > 2:
            raise ValueError("dynamics step requires finite state and control")
        return original(model, x, u)

    monkeypatch.setattr(runtime, "step", sometimes_nan)
    rec = run(small_config(steps=5))
    assert rec.aborted
    assert not rec.success
    assert rec.abort_reason
    assert rec.states.shape[0] >= 1


def test_violation_table_counts_obstacles_and_collisions():
    task = make_scenario("narrow_crossing3")
    states = np.tile(task.starts[None], (3, 1, 1))
    # step 1: agents 0 and 1 coincide -> one collision indicator each
    states[1, 1] = states[1, 0]
    # step 2: agent 2 sits inside the upper wall obstacle
    states[2, 2, :2] = task.obstacles[0, :2]
    counts = violation_table(task, states)
    assert counts.tolist() == [1, 1, 1]


def test_realized_cost_examples():
    model = DynamicsModel(DynamicsKind.DOUBLE_INTEGRATOR_2D)
    task = TaskSpec(
        name="point_mass", model=model,
        starts=np.zeros((1, 4)), goals=np.zeros((1, 4)),
        state_weight=np.diag([1.0, 0, 0, 0]), control_weight=np.zeros((2, 2)),
        terminal_weight=np.zeros((4, 4)), obstacles=np.zeros((0, 3)),
        collision_radius=0.5, crash_penalty=1e6, horizon=2, mpc_steps=2,
    )
    # agent parked at its goal: zero cost
    rec = runtime.RunRecord(
        mode="centralized", seed=0,
        states=np.zeros((3, 1, 4)), controls=np.zeros((2, 1, 2)),
        residuals=np.zeros((2, 0, 2)), per_agent_cost=np.zeros(1),
        violations=0, success=True, step_wall_clock=np.zeros(2),
    )
    assert realized_cost(rec, task).tolist() == [0.0]
    # per-step stage costs 3 and 4 sum to 7 (px = sqrt(3), sqrt(4))
    rec.states[0, 0, 0] = np.sqrt(3.0)
    rec.states[1, 0, 0] = 2.0
    rec.states[2, 0, 0] = 0.0
    assert realized_cost(rec, task)[0] == pytest.approx(7.0)


def test_realized_cost_adds_crash_penalty():
    task = make_scenario("narrow_crossing3")
    states = np.tile(task.starts[None], (2, 1, 1))
    states[1, 1] = states[1, 0]  # collision at step 1
    rec = runtime.RunRecord(
        mode="distributed", seed=0,
        states=states, controls=np.zeros((1, 3, 2)),
        residuals=np.zeros((1, 2, 2)), per_agent_cost=np.zeros(3),
        violations=2, success=False, step_wall_clock=np.zeros(1),
    )
    costs = realized_cost(rec, task)
    base = realized_cost(
        runtime.RunRecord(
            mode="distributed", seed=0,
            states=np.tile(task.starts[None], (2, 1, 1)), controls=np.zeros((1, 3, 2)),
            residuals=np.zeros((1, 2, 2)), per_agent_cost=np.zeros(3),
            violations=0, success=True, step_wall_clock=np.zeros(1),
        ),
        task,
    )
    assert costs[0] - base[0] == pytest.approx(task.crash_penalty)
    assert costs[1] - base[1] == pytest.approx(task.crash_penalty)
    assert costs[2] == pytest.approx(base[2])


def test_policy_factories_and_remap():
    model = DynamicsModel(DynamicsKind.DUBINS)
    pc = PolicyConfig(kind="mixture", init_std=(0.3, 0.6), num_modes=2,
                      neighbor_std_scale=0.5)
    pol = make_policy(pc, model, num_blocks=2, horizon=4, seed=0)
    assert pol.means.shape == (2, 4, 4)
    # neighbor block stds are scaled down
    assert pol.covariances[0, 0, 2, 2] == pytest.approx((0.5 * 0.3) ** 2)

    init_cov = runtime._init_cov(pc, 2, 2, ego_all=False)
    fill = {2: np.full((4, 2), 7.0)}
    out = remap_policy_blocks(pol, (0, 1), (0, 2), 2, fill, init_cov)
    assert out.means.shape == (2, 4, 4)
    assert np.allclose(out.means[:, :, 2:], 7.0)
    assert np.allclose(out.means[:, :, :2], pol.means[:, :, :2])


def test_stein_policy_round_trip_runs():
    task = make_scenario("point_mass", {"mpc_steps": 2, "horizon": 6})
    opt = OptimizerConfig(
        num_samples=8, num_iterations=2, horizon=6,
        shape=ShapeConfig(kind=ShapeKind.NORMALIZED_EXPONENTIAL, lam=0.3),
    )
    cfg = RunConfig(
        task=task, optimizer=opt,
        policy=PolicyConfig(kind="stein", num_particles=2, rollouts_per_particle=4,
                            init_std=1.0),
        mode="distributed", admm_iters=1, seed=0,
    )
    rec = run(cfg)
    assert not rec.aborted


def test_mixture_policy_round_trip_runs():
    cfg = small_config(steps=2)
    cfg = RunConfig(
        task=cfg.task, optimizer=cfg.optimizer,
        policy=PolicyConfig(kind="mixture", num_modes=2, init_std=1.0),
        mode="distributed", admm_iters=1, seed=0,
    )
    rec = run(cfg)
    assert not rec.aborted


def test_run_config_validation():
    cfg = small_config()
    with pytest.raises(ValueError):
        RunConfig(task=cfg.task, optimizer=cfg.optimizer, admm_iters=0)
    with pytest.raises(ValueError):
        RunConfig(task=cfg.task, optimizer=cfg.optimizer, consensus_mu=0.0)
    with pytest.raises(ValueError):
        PolicyConfig(kind="nonsense")

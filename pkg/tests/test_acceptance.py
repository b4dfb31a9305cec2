"""End-to-end acceptance suite.

Each test prints one PASS line when its criterion holds; tолerances and
budgets are fixed here, not tuned at runtime.  The heavier closed-loop
criteria parse the shipped configs so the public config surface is
exercised on the same settings a user would run.
"""

import time
from pathlib import Path

import numpy as np
import pytest

import point_mass_table
from conftest import config_path

from dsmpc.analysis import ScalarPointMass, verify_bounds_mc
from dsmpc.cli import main as cli_main
from dsmpc.config import parse_config
from dsmpc.optimizer import LocalProblem, OptimizerConfig, UpdateMode, optimize
from dsmpc.policies import (
    GaussianMixturePolicy,
    SteinPolicy,
    UnimodalGaussianPolicy,
    gaussian_trajectory_log_density,
    gmm_em_update,
    gmm_weighted_log_likelihood,
    sample_controls,
    stein_scores,
    ug_update,
)
from dsmpc.runtime import run
from dsmpc.shapes import ShapeConfig, ShapeKind, compute_weights


def report(criterion: str, detail: str = ""):
    print(f"[acceptance] {criterion}: PASS {detail}")


# ---------------------------------------------------------------------------
# 1. weight-law unification


def test_criterion_01_weight_law_unification():
    tic = time.perf_counter()
    rng = np.random.default_rng(2024)
    lam = 1.0
    r_soft = 1.0 + 1e-6
    gamma_soft = lam / (r_soft - 1.0)
    exp_cfg = ShapeConfig(kind=ShapeKind.EXPONENTIAL, lam=lam)
    soft_cfg = ShapeConfig(kind=ShapeKind.TSALLIS_REPARAM, gamma=gamma_soft, r=r_soft)
    gamma_hard = 2.5
    ind_cfg = ShapeConfig(kind=ShapeKind.INDICATOR, gamma=gamma_hard)
    hard_cfg = ShapeConfig(kind=ShapeKind.TSALLIS_REPARAM, gamma=gamma_hard, r=1e6)

    worst_soft = worst_hard = 0.0
    for _ in range(100):
        costs = rng.uniform(0.0, 8.0, size=int(rng.integers(2, 40)))
        worst_soft = max(
            worst_soft,
            float(np.abs(compute_weights(costs, exp_cfg) - compute_weights(costs, soft_cfg)).max()),
        )
        hard_costs = rng.uniform(0.0, 5.0, size=int(rng.integers(2, 40)))
        if not (hard_costs < gamma_hard).any():
            hard_costs[0] = 1.0
        worst_hard = max(
            worst_hard,
            float(np.abs(compute_weights(hard_costs, ind_cfg) - compute_weights(hard_costs, hard_cfg)).max()),
        )
    elapsed = time.perf_counter() - tic
    assert worst_soft < 1e-3
    assert worst_hard < 1e-3
    assert elapsed < 1.0
    report("criterion 1 (weight-law unification)",
           f"max dev exp={worst_soft:.2e} indicator={worst_hard:.2e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. policy-update oracles


def test_criterion_02_policy_update_oracles():
    tic = time.perf_counter()
    rng = np.random.default_rng(7)

    # (a) weighted mean/covariance against brute-force summation
    for _ in range(20):
        m, horizon, n_u = 24, 5, 2
        samples = rng.normal(size=(m, horizon, n_u))
        w = rng.random(m)
        w /= w.sum()
        prev = UnimodalGaussianPolicy(
            means=np.zeros((horizon, n_u)),
            covariances=np.tile(np.eye(n_u), (horizon, 1, 1)),
            covariance_floor=0.0,
        )
        out = ug_update(samples, w, prev)
        mu = np.zeros((horizon, n_u))
        for i in range(m):
            mu += w[i] * samples[i]
        assert np.abs(out.means - mu).max() < 1e-12
        for t in range(horizon):
            cov = np.zeros((n_u, n_u))
            for i in range(m):
                d = samples[i, t] - mu[t]
                cov += w[i] * np.outer(d, d)
            assert np.abs(out.covariances[t] - cov).max() < 1e-12

    # (b) weighted EM likelihood is monotone over 10 iterations, 50 batches
    for batch in range(50):
        brng = np.random.default_rng(1000 + batch)
        samples = brng.normal(scale=2.0, size=(24, 2, 1)) + brng.choice(
            [-2.0, 2.0], size=(24, 1, 1)
        )
        w = brng.random(24)
        w /= w.sum()
        pol = GaussianMixturePolicy(
            mixture_weights=[0.5, 0.5],
            means=np.stack([-np.ones((2, 1)), 3.0 * np.ones((2, 1))]),
            covariances=np.tile(2.0 * np.eye(1), (2, 2, 1, 1)),
            reset_cov=np.eye(1),
        )
        prev_ll = gmm_weighted_log_likelihood(samples, w, pol)
        for _ in range(10):
            pol, _ = gmm_em_update(samples, w, pol)
            ll = gmm_weighted_log_likelihood(samples, w, pol)
            assert ll >= prev_ll - 1e-8
            prev_ll = ll

    # (c) Stein score against central finite differences
    for trial in range(5):
        srng = np.random.default_rng(50 + trial)
        horizon, n_u, S = 3, 2, 5
        particles = srng.normal(size=(1, horizon, n_u))
        a = srng.normal(size=(n_u, n_u))
        cov = a @ a.T + 0.4 * np.eye(n_u)
        pol = SteinPolicy(particles=particles, rollout_cov=cov, rollouts_per_particle=S)
        samples = sample_controls(pol, S, seed=trial)
        w = srng.random(S)
        w /= w.sum()
        g = stein_scores(samples, w, pol)[0]

        def objective(theta):
            return sum(
                w[s] * gaussian_trajectory_log_density(samples[s], theta, cov)
                for s in range(S)
            )

        eps = 1e-5
        for t in range(horizon):
            for k in range(n_u):
                up, dn = particles[0].copy(), particles[0].copy()
                up[t, k] += eps
                dn[t, k] -= eps
                fd = (objective(up) - objective(dn)) / (2 * eps)
                assert abs(g[t, k] - fd) <= 1e-4 * max(abs(fd), 1e-6)

    elapsed = time.perf_counter() - tic
    assert elapsed < 30.0
    report("criterion 2 (policy-update oracles)", f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3. SS / projection algebraic identity


def scalar_step(x, u):
    pos = x[..., 0] + 0.1 * x[..., 1]
    vel = x[..., 1] + 0.1 * u[..., 0]
    return np.stack([pos, vel], axis=-1)


def test_criterion_03_gradient_projection_identity():
    horizon = 8
    prob = LocalProblem(
        step_fn=scalar_step, x0=np.array([1.0, 0.0]),
        cost_fn=lambda s, c: np.square(s[..., 1:, :]).sum(axis=(-1, -2)),
        horizon=horizon,
    )
    worst = 0.0
    for seed in range(5):
        pol = UnimodalGaussianPolicy(
            means=np.zeros((horizon, 1)),
            covariances=np.tile(0.25 * np.eye(1), (horizon, 1, 1)),
        )
        base = dict(num_samples=32, num_iterations=1, horizon=horizon,
                    shape=ShapeConfig(kind=ShapeKind.EXPONENTIAL, lam=1.0),
                    step_size0=1.0)
        proj = optimize(prob, pol, OptimizerConfig(update_mode=UpdateMode.PROJECTION, **base), seed=seed)
        grad = optimize(prob, pol, OptimizerConfig(update_mode=UpdateMode.GRADIENT_SS, **base), seed=seed)
        samples = sample_controls(pol, 32, np.random.SeedSequence(seed).spawn(1)[0])
        u_bar = samples.mean(axis=0)
        lhs = grad.policy.means - pol.means
        rhs = proj.policy.means - u_bar
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    assert worst < 1e-12
    report("criterion 3 (SS/projection identity)", f"max dev {worst:.2e}")


# ---------------------------------------------------------------------------
# 4. point-mass cost/variance ordering


def test_criterion_04_point_mass_ordering():
    tic = time.perf_counter()
    seeds = range(20)
    costs = {m: point_mass_table.method_costs(m, seeds) for m in ("mppi", "cem", "tsallis")}
    means = {m: float(c.mean()) for m, c in costs.items()}
    variances = {m: float(c.var(ddof=1)) for m, c in costs.items()}
    elapsed = time.perf_counter() - tic

    assert means["tsallis"] <= 0.95 * means["mppi"]
    assert means["cem"] <= 0.95 * means["mppi"]
    assert variances["cem"] < variances["tsallis"] < variances["mppi"]
    assert elapsed < 600.0
    report(
        "criterion 4 (point-mass ordering)",
        f"means {means['tsallis']:.0f}/{means['cem']:.0f}/{means['mppi']:.0f} "
        f"vars {variances['cem']:.0f}<{variances['tsallis']:.0f}<{variances['mppi']:.0f}, "
        f"{elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# 7. single-agent reduction


def test_criterion_07_single_agent_reduction():
    spec = parse_config(config_path("point_mass.toml"))
    task = spec.config.task
    task.mpc_steps = 10
    import dataclasses

    base = dataclasses.replace(
        spec.config, mpc_steps=10, admm_iters=1,
        consensus_mu=1e-100, consensus_nu=1e-100, seed=11,
    )
    dist = run(dataclasses.replace(base, mode="distributed"))
    cent = run(dataclasses.replace(base, mode="centralized"))
    dev = float(np.abs(dist.states - cent.states).max())
    assert dev <= 1e-9
    report("criterion 7 (single-agent reduction)", f"max dev {dev:.2e}")


# ---------------------------------------------------------------------------
# 8. sample-complexity bound verification


def test_criterion_08_bound_verification():
    tic = time.perf_counter()
    problem = ScalarPointMass()
    rng = np.random.default_rng(0)
    pilot = problem.costs(problem.sample_controls(rng, 50_000))
    median = float(np.median(pilot))
    shapes = {
        "exponential": ShapeConfig(kind=ShapeKind.EXPONENTIAL, lam=median),
        "tsallis": ShapeConfig(kind=ShapeKind.TSALLIS_REPARAM, gamma=2.0 * median, r=2.0),
        "indicator": ShapeConfig(kind=ShapeKind.INDICATOR, gamma=median),
    }
    details = []
    for name, shape in shapes.items():
        rep = verify_bounds_mc(problem, shape, num_samples=500, trials=1000,
                               eps1=0.1, eps2=0.5, seed=123)
        assert rep.freq1 <= rep.rho1, f"{name}: freq1 {rep.freq1} > rho1 {rep.rho1}"
        assert rep.freq2 <= rep.rho2, f"{name}: freq2 {rep.freq2} > rho2 {rep.rho2}"
        details.append(f"{name} freq1={rep.freq1:.4g}<=rho1={rep.rho1:.3g}")
    elapsed = time.perf_counter() - tic
    assert elapsed < 120.0
    report("criterion 8 (bound verification)", "; ".join(details) + f", {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# 10. byte-identical determinism


def test_criterion_10_deterministic_exports(tmp_path):
    cfg = config_path("point_mass.toml")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli_main(["run", str(cfg), "--out", str(out1)]) == 0
    assert cli_main(["run", str(cfg), "--out", str(out2)]) == 0
    compared = 0
    for f1 in sorted(out1.rglob("*")):
        if f1.is_dir() or f1.name == "timings.json":
            continue
        f2 = out2 / f1.relative_to(out1)
        assert f1.read_bytes() == f2.read_bytes(), f1.name
        compared += 1
    assert compared >= 3
    report("criterion 10 (determinism)", f"{compared} files byte-identical")

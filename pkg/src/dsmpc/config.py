"""Strict experiment-config parsing.

One TOML file describes one experiment: a scenario, optional dynamics
overrides, the optimizer (shape-function method plus the policy class),
the consensus settings, and the run plan (mode + seed list).  Parsing is
strict: unknown keys, missing required keys, and type mismatches raise
ConfigError naming the offending key and its line in the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .admm import NeighborhoodMode
from .errors import ConfigError
from .optimizer import OptimizerConfig, UpdateMode
from .runtime import PolicyConfig, RunConfig, RunMode
from .shapes import ShapeConfig, ShapeKind
from .tasks import make_scenario

# Shape-function methods: perspective name -> (shape kind, update mode).
METHODS = {
    "mppi": (ShapeKind.EXPONENTIAL, UpdateMode.PROJECTION),
    "normalized_mppi": (ShapeKind.NORMALIZED_EXPONENTIAL, UpdateMode.PROJECTION),
    "tsallis": (ShapeKind.TSALLIS_REPARAM, UpdateMode.PROJECTION),
    "cem": (ShapeKind.INDICATOR, UpdateMode.PROJECTION),
    "sigmoid": (ShapeKind.SIGMOID, UpdateMode.PROJECTION),
    "gradient_ss": (ShapeKind.EXPONENTIAL, UpdateMode.GRADIENT_SS),
}


@dataclass
class BoundsSpec:
    """Settings for the sample-complexity verification command."""

    num_samples: int = 500
    trials: int = 1000
    eps1: float = 0.1
    eps2: float = 0.5
    lam: float | None = None      # default: median oracle cost
    gamma: float | None = None    # default: median oracle cost
    r: float = 2.0
    seed: int = 0
    oracle_samples: int = 1_000_000


@dataclass
class ExperimentSpec:
    """A validated experiment: one RunConfig template plus the seed sweep."""

    name: str
    config: RunConfig
    seeds: list[int]
    bounds: BoundsSpec = field(default_factory=BoundsSpec)
    source_text: str = ""

    def config_for_seed(self, seed: int) -> RunConfig:
        return dataclasses.replace(self.config, seed=seed)


def _line_of(text: str, key: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(key):
            return lineno
    return None


def _fail(text: str, section: str, key: str, reason: str):
    where = f"{section}.{key}" if section else key
    line = _line_of(text, key)
    at = f" (line {line})" if line else ""
    raise ConfigError(f"config key '{where}'{at}: {reason}")


_NUMBER = (int, float)


def _coerce(text, section, key, value, expected):
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, _NUMBER):
            _fail(text, section, key, f"expected a number, got {value!r}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(text, section, key, f"expected an integer, got {value!r}")
        return value
    if expected is bool:
        if not isinstance(value, bool):
            _fail(text, section, key, f"expected a boolean, got {value!r}")
        return value
    if expected is str:
        if not isinstance(value, str):
            _fail(text, section, key, f"expected a string, got {value!r}")
        return value
    if expected == "number_list":
        if not isinstance(value, list) or not all(
            isinstance(v, _NUMBER) and not isinstance(v, bool) for v in value
        ):
            _fail(text, section, key, f"expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if expected == "int_list":
        if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            _fail(text, section, key, f"expected a list of integers, got {value!r}")
        return list(value)
    if expected == "number_or_list":
        if isinstance(value, _NUMBER) and not isinstance(value, bool):
            return float(value)
        return _coerce(text, section, key, value, "number_list")
    if expected == "number_or_str":
        if isinstance(value, str):
            return value
        return _coerce(text, section, key, value, float)
    raise AssertionError(f"unknown schema type {expected!r}")  # pragma: no cover


def _take_section(text, raw: dict, section: str, schema: dict) -> dict:
    body = raw.pop(section, {})
    if not isinstance(body, dict):
        _fail(text, "", section, "expected a table")
    out = {}
    for key, value in body.items():
        if key not in schema:
            _fail(text, section, key, "unknown key")
        out[key] = _coerce(text, section, key, value, schema[key][0])
    for key, (_, default, required) in schema.items():
        if key not in out:
            if required:
                _fail(text, section, key, "required key is missing")
            out[key] = default
    return out


_DYNAMICS_SCHEMA = {
    "kind": (str, None, False),
    "dt": (float, None, False),
    "control_limits": ("number_list", None, False),
    "mass": (float, None, False),
    "gravity": (float, None, False),
    "inertia": ("number_list", None, False),
    "integrator": (str, None, False),
}

_OPTIMIZER_SCHEMA = {
    "method": (str, "mppi", False),
    "num_samples": (int, 64, False),
    "num_iterations": (int, 4, False),
    "horizon": (int, None, False),            # default: scenario horizon
    "lam": (float, 1.0, False),
    "r": (float, 2.0, False),
    "gamma": (float, None, False),
    "elite_fraction": (float, None, False),
    "kappa": (float, 10.0, False),
    "quantile_rho": (float, 0.1, False),
    "smoothing": (float, 1.0, False),
    "step_size0": (float, 1.0, False),
    "step_exponent": (float, 0.5, False),
    "sample_exponent": (float, 0.0, False),
    "control_cost_correction": (bool, False, False),
}

_POLICY_SCHEMA = {
    "kind": (str, "gaussian", False),
    "init_std": ("number_or_list", 1.0, False),
    "covariance_floor": (float, 1e-6, False),
    "warm_start_blend": (float, 0.5, False),
    "solve_cov_reset": (float, 1.0, False),
    "first_round_scale": (float, 1.0, False),
    "anneal_decay": (float, 0.75, False),
    "anneal_floor": (float, 0.1, False),
    "neighbor_std_scale": (float, 0.5, False),
    "init_jitter": (float, 0.1, False),
    "num_modes": (int, 2, False),
    "num_particles": (int, 4, False),
    "rollouts_per_particle": (int, 8, False),
    "stein_step_size": (float, 0.5, False),
    "bandwidth": ("number_or_str", "median", False),
}

_ADMM_SCHEMA = {
    "iterations": (int, 5, False),
    "mu": (float, 50.0, False),
    "nu": (float, 100.0, False),
    "crash_penalty": (float, None, False),     # default: scenario crash penalty
    "neighborhood": (str, "distance_ball", False),
    "radius": (float, 3.0, False),
    "size": (int, 2, False),
}

_RUN_SCHEMA = {
    "mode": (str, "distributed", False),
    "mpc_steps": (int, None, False),           # default: scenario mpc_steps
    "seeds": ("int_list", [0], False),
}

_BOUNDS_SCHEMA = {
    "num_samples": (int, 500, False),
    "trials": (int, 1000, False),
    "eps1": (float, 0.1, False),
    "eps2": (float, 0.5, False),
    "lam": (float, None, False),
    "gamma": (float, None, False),
    "r": (float, 2.0, False),
    "seed": (int, 0, False),
    "oracle_samples": (int, 1_000_000, False),
}


def _build_shape(text, opt: dict) -> tuple[ShapeConfig, UpdateMode]:
    method = opt["method"]
    if method not in METHODS:
        _fail(text, "optimizer", "method",
              f"unknown method {method!r}; expected one of {sorted(METHODS)}")
    kind, update_mode = METHODS[method]
    kwargs = dict(kind=kind, lam=opt["lam"], kappa=opt["kappa"],
                  quantile_rho=opt["quantile_rho"])
    if kind in (ShapeKind.TSALLIS_REPARAM, ShapeKind.INDICATOR):
        kwargs["gamma"] = opt.get("gamma")
        kwargs["elite_fraction"] = opt.get("elite_fraction")
        if kwargs["gamma"] is None and kwargs["elite_fraction"] is None:
            kwargs["elite_fraction"] = 0.2
    if kind is ShapeKind.TSALLIS_REPARAM:
        kwargs["r"] = opt["r"]
    try:
        return ShapeConfig(**kwargs), update_mode
    except ValueError as err:
        _fail(text, "optimizer", "method", str(err))


def parse_config(path: str | Path) -> ExperimentSpec:
    """Load and validate an experiment config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"config parse error in {path}: {err}") from err

    scenario_body = raw.pop("scenario", None)
    if not isinstance(scenario_body, dict) or "name" not in scenario_body:
        _fail(text, "scenario", "name", "required key is missing")
    scenario_body = dict(scenario_body)
    name = _coerce(text, "scenario", "name", scenario_body.pop("name"), str)

    optimizer_body = raw.pop("optimizer", {})
    if not isinstance(optimizer_body, dict):
        _fail(text, "", "optimizer", "expected a table")
    policy_body = optimizer_body.pop("policy", {})

    opt = {}
    for key, value in optimizer_body.items():
        if key not in _OPTIMIZER_SCHEMA:
            _fail(text, "optimizer", key, "unknown key")
        opt[key] = _coerce(text, "optimizer", key, value, _OPTIMIZER_SCHEMA[key][0])
    for key, (_, default, _req) in _OPTIMIZER_SCHEMA.items():
        opt.setdefault(key, default)

    if not isinstance(policy_body, dict):
        _fail(text, "optimizer", "policy", "expected a table")
    pol = {}
    for key, value in policy_body.items():
        if key not in _POLICY_SCHEMA:
            _fail(text, "optimizer.policy", key, "unknown key")
        pol[key] = _coerce(text, "optimizer.policy", key, value, _POLICY_SCHEMA[key][0])
    for key, (_, default, _req) in _POLICY_SCHEMA.items():
        pol.setdefault(key, default)

    dyn = _take_section(text, raw, "dynamics", _DYNAMICS_SCHEMA)
    admm = _take_section(text, raw, "admm", _ADMM_SCHEMA)
    run_body = _take_section(text, raw, "run", _RUN_SCHEMA)
    bounds_body = _take_section(text, raw, "bounds", _BOUNDS_SCHEMA)
    for leftover in raw:
        _fail(text, "", leftover, "unknown section")

    # scenario geometry; builder rejects unknown keys
    try:
        task = make_scenario(name, scenario_body)
    except ValueError as err:
        raise ConfigError(f"scenario: {err}") from None

    # dynamics overrides
    overrides = {}
    for key, value in dyn.items():
        if value is None:
            continue
        if key == "kind":
            if value != task.model.kind.value:
                _fail(text, "dynamics", "kind",
                      f"scenario {name!r} uses {task.model.kind.value!r}")
            continue
        if key == "control_limits":
            value = np.asarray(value, dtype=float).reshape(task.model.n_u, 2)
        if key == "inertia":
            value = tuple(value)
        overrides[key] = value
    if overrides:
        try:
            task.model = dataclasses.replace(task.model, **overrides)
        except ValueError as err:
            raise ConfigError(f"dynamics: {err}") from None

    horizon = opt["horizon"] if opt["horizon"] is not None else task.horizon
    task.horizon = horizon
    crash = admm["crash_penalty"] if admm["crash_penalty"] is not None else task.crash_penalty
    task.crash_penalty = crash

    shape, update_mode = _build_shape(text, opt)
    try:
        optimizer = OptimizerConfig(
            num_samples=opt["num_samples"],
            num_iterations=opt["num_iterations"],
            horizon=horizon,
            shape=shape,
            update_mode=update_mode,
            step_size0=opt["step_size0"],
            step_exponent=opt["step_exponent"],
            sample_exponent=opt["sample_exponent"],
            crash_penalty=crash,
            smoothing=opt["smoothing"],
            control_cost_correction=opt["control_cost_correction"],
        )
    except ValueError as err:
        raise ConfigError(f"optimizer: {err}") from None

    init_std = pol["init_std"]
    if isinstance(init_std, list):
        if len(init_std) != task.model.n_u:
            _fail(text, "optimizer.policy", "init_std",
                  f"expected {task.model.n_u} entries")
        init_std = tuple(init_std)
    try:
        policy = PolicyConfig(
            kind=pol["kind"], init_std=init_std,
            covariance_floor=pol["covariance_floor"],
            warm_start_blend=pol["warm_start_blend"],
            solve_cov_reset=pol["solve_cov_reset"],
            first_round_scale=pol["first_round_scale"],
            anneal_decay=pol["anneal_decay"],
            anneal_floor=pol["anneal_floor"],
            neighbor_std_scale=pol["neighbor_std_scale"],
            init_jitter=pol["init_jitter"],
            num_modes=pol["num_modes"],
            num_particles=pol["num_particles"],
            rollouts_per_particle=pol["rollouts_per_particle"],
            stein_step_size=pol["stein_step_size"],
            bandwidth=pol["bandwidth"],
        )
    except ValueError as err:
        raise ConfigError(f"optimizer.policy: {err}") from None
    if policy.kind == "stein":
        expected = policy.num_particles * policy.rollouts_per_particle
        if optimizer.num_samples != expected:
            _fail(text, "optimizer", "num_samples",
                  f"stein policies need num_samples = particles*rollouts = {expected}")

    if admm["neighborhood"] == "distance_ball":
        neighborhood = NeighborhoodMode("distance_ball", radius=admm["radius"])
    elif admm["neighborhood"] == "fixed_size":
        neighborhood = NeighborhoodMode("fixed_size", size=admm["size"])
    else:
        _fail(text, "admm", "neighborhood",
              "expected 'distance_ball' or 'fixed_size'")

    if run_body["mode"] not in ("distributed", "centralized"):
        _fail(text, "run", "mode", "expected 'distributed' or 'centralized'")
    if not run_body["seeds"]:
        _fail(text, "run", "seeds", "seed list must not be empty")

    try:
        config = RunConfig(
            task=task,
            optimizer=optimizer,
            policy=policy,
            mode=RunMode(run_body["mode"]),
            mpc_steps=run_body["mpc_steps"],
            admm_iters=admm["iterations"],
            consensus_mu=admm["mu"],
            consensus_nu=admm["nu"],
            neighborhood=neighborhood,
            seed=run_body["seeds"][0],
        )
    except ValueError as err:
        raise ConfigError(f"run: {err}") from None

    bounds = BoundsSpec(**bounds_body)
    return ExperimentSpec(
        name=name, config=config, seeds=list(run_body["seeds"]),
        bounds=bounds, source_text=text,
    )

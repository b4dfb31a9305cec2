"""Distributed vs centralized scaling on the gated-formation task.

For each fleet size, runs the distributed scheme and the centralized
baseline at an equal total sample budget (M_central = N * L * M_local)
and prints per-agent step time and per-agent realized cost.

Usage: python scripts/scaling_suite.py [--sizes 4,16] [--seeds 3]
"""

import argparse
import dataclasses

import numpy as np

from dsmpc.config import parse_config
from dsmpc.runtime import RunMode, run
from dsmpc.tasks import make_scenario


def scaled_spec(spec, n):
    geometry = dict(spec.config.task.geometry)
    geometry["num_agents"] = n
    task = make_scenario(spec.config.task.name, geometry)
    task.horizon = spec.config.task.horizon
    task.crash_penalty = spec.config.task.crash_penalty
    return dataclasses.replace(spec, config=dataclasses.replace(spec.config, task=task))


def centralized_variant(config):
    m_central = config.task.num_agents * config.admm_iters * config.optimizer.num_samples
    optimizer = dataclasses.replace(config.optimizer, num_samples=m_central)
    return dataclasses.replace(config, mode=RunMode.CENTRALIZED, optimizer=optimizer)


def run_rows(config, seeds, label):
    times, costs = [], []
    for seed in seeds:
        record = run(dataclasses.replace(config, seed=seed))
        n = record.states.shape[1]
        times.append(float(np.mean(record.step_wall_clock)) / n)
        costs.append(float(np.mean(record.per_agent_cost)))
    print(
        f"{label:28s} per-agent step {np.median(times) * 1e3:8.2f} ms   "
        f"per-agent cost {np.median(costs):12.2f}"
    )
    return float(np.median(times)), float(np.median(costs))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("config", nargs="?", default="configs/scaling.toml")
    parser.add_argument("--sizes", default="4,16")
    parser.add_argument("--seeds", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    seeds = range(args.seeds)

    base = parse_config(args.config)
    for n in sizes:
        spec = scaled_spec(base, n)
        run_rows(spec.config, seeds, f"distributed N={n}")
        run_rows(centralized_variant(spec.config), seeds, f"centralized N={n}")


if __name__ == "__main__":
    main()

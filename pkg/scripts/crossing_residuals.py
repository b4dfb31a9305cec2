"""Three-vehicle narrow crossing: success and ADMM residual contraction.

Runs the shipped crossing config over its seed list and prints, per MPC
step, the median (over seeds) primal residual at the first and last ADMM
round and their ratio.

Usage: python scripts/crossing_residuals.py [config]
"""

import sys

import numpy as np

from dsmpc.config import parse_config
from dsmpc.runtime import run


def main():
    config = sys.argv[1] if len(sys.argv) > 1 else "configs/narrow_crossing3.toml"
    spec = parse_config(config)
    profiles, successes = [], 0
    for seed in spec.seeds:
        record = run(spec.config_for_seed(seed))
        profiles.append(np.linalg.norm(record.residuals, axis=2))
        successes += record.success
        print(f"seed {seed}: success={record.success} violations={record.violations}")
    med = np.median(np.stack(profiles), axis=0)
    print(f"\nsuccess rate: {successes}/{len(spec.seeds)}")
    print(f"{'step':>4s} {'round 1':>9s} {'round L':>9s} {'ratio':>7s}")
    for t in range(med.shape[0]):
        print(f"{t:4d} {med[t, 0]:9.3f} {med[t, -1]:9.3f} {med[t, -1] / med[t, 0]:7.2f}")


if __name__ == "__main__":
    main()

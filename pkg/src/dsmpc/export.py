"""Deterministic result export and aggregation.

Numbers are serialized with 17 significant digits so every double makes
the CSV/JSON round trip bit-exactly.  Wall-clock measurements are kept out
of the deterministic artifacts (summary.json, CSVs) and written to a
separate timings.json, so re-running a config with the same seed produces
byte-identical exports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import control_names, state_names
from .runtime import RunRecord
from .tasks import TaskSpec


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# per-seed files


def write_trajectory_csv(record: RunRecord, task: TaskSpec, path: str | Path):
    """One row per (step, agent): the executed state and the control applied."""
    snames = state_names(task.model)
    cnames = control_names(task.model)
    lines = ["step,agent," + ",".join(snames + cnames)]
    steps = record.controls.shape[0]
    n = record.states.shape[1]
    for s in range(steps):
        for a in range(n):
            vals = [str(s), str(a)]
            vals += [fmt(v) for v in record.states[s, a]]
            vals += [fmt(v) for v in record.controls[s, a]]
            lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Inverse of write_trajectory_csv: ((T, N, n_x+n_u) array, column names)."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    width = len(header) - 2
    if not rows:
        return np.zeros((0, 0, width)), header[2:]
    steps = max(int(r[0]) for r in rows) + 1
    agents = max(int(r[1]) for r in rows) + 1
    data = np.empty((steps, agents, width))
    for r in rows:
        data[int(r[0]), int(r[1])] = [float(v) for v in r[2:]]
    return data, header[2:]


def split_trajectory_columns(task: TaskSpec, data: np.ndarray):
    n_x = task.model.n_x
    return data[..., :n_x], data[..., n_x:]


def write_residuals_csv(record: RunRecord, path: str | Path):
    lines = ["mpc_step,admm_iter,primal_state,primal_control"]
    for t in range(record.residuals.shape[0]):
        for l in range(record.residuals.shape[1]):
            lines.append(
                f"{t},{l},{fmt(record.residuals[t, l, 0])},{fmt(record.residuals[t, l, 1])}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def seed_summary(record: RunRecord) -> dict:
    return {
        "seed": record.seed,
        "mode": record.mode,
        "success": bool(record.success),
        "aborted": bool(record.aborted),
        "abort_reason": record.abort_reason,
        "violations": int(record.violations),
        "per_agent_cost": [float(c) for c in record.per_agent_cost],
        "total_cost": float(np.sum(record.per_agent_cost)),
        "executed_steps": int(record.controls.shape[0]),
    }


# ---------------------------------------------------------------------------
# bundles


@dataclass
class ResultBundle:
    """Aggregate of a seed sweep on one config."""

    scenario: str
    mode: str
    seeds: list[int]
    per_seed: list[dict]
    mean_cost: float
    cost_variance: float
    success_rate: float
    mean_step_runtime: float          # seconds; excluded from summary.json

    @classmethod
    def from_records(cls, scenario: str, records: list[RunRecord]) -> "ResultBundle":
        summaries = [seed_summary(r) for r in records]
        totals = np.array([s["total_cost"] for s in summaries])
        finite = totals[np.isfinite(totals)]
        runtimes = [
            float(np.mean(r.step_wall_clock)) for r in records if r.step_wall_clock.size
        ]
        return cls(
            scenario=scenario,
            mode=records[0].mode if records else "",
            seeds=[r.seed for r in records],
            per_seed=summaries,
            mean_cost=float(finite.mean()) if finite.size else float("inf"),
            cost_variance=float(finite.var(ddof=1)) if finite.size > 1 else 0.0,
            success_rate=sum(s["success"] for s in summaries) / max(len(summaries), 1),
            mean_step_runtime=float(np.mean(runtimes)) if runtimes else 0.0,
        )

    def summary_dict(self) -> dict:
        """Deterministic fields only (no wall-clock measurements)."""
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "seeds": self.seeds,
            "per_seed": self.per_seed,
            "mean_cost": self.mean_cost,
            "cost_variance": self.cost_variance,
            "success_rate": self.success_rate,
        }


def aggregate_from_summaries(summaries: list[dict]) -> dict:
    """Recompute the bundle aggregates from exported per-seed summaries."""
    totals = np.array([s["total_cost"] for s in summaries])
    finite = totals[np.isfinite(totals)]
    return {
        "mean_cost": float(finite.mean()) if finite.size else float("inf"),
        "cost_variance": float(finite.var(ddof=1)) if finite.size > 1 else 0.0,
        "success_rate": sum(s["success"] for s in summaries) / max(len(summaries), 1),
    }


def _dump_json(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def export_run(record: RunRecord, task: TaskSpec, seed_dir: str | Path):
    """Write one seed's trajectory, residual series, and summary."""
    seed_dir = Path(seed_dir)
    seed_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(record, task, seed_dir / "trajectory.csv")
    write_residuals_csv(record, seed_dir / "residuals.csv")
    _dump_json(seed_summary(record), seed_dir / "summary.json")


def export_bundle(bundle: ResultBundle, out_dir: str | Path):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(bundle.summary_dict(), out_dir / "summary.json")
    _dump_json(
        {"mean_step_runtime_seconds": bundle.mean_step_runtime},
        out_dir / "timings.json",
    )


def load_out_dir(out_dir: str | Path) -> dict:
    """Read an exported experiment directory back (summary + per-seed files)."""
    out_dir = Path(out_dir)
    summary = json.loads((out_dir / "summary.json").read_text())
    per_seed = []
    for sub in sorted(out_dir.glob("seed_*")):
        per_seed.append(json.loads((sub / "summary.json").read_text()))
    return {"summary": summary, "per_seed": per_seed}

import json
from pathlib import Path

import numpy as np
import pytest

from dsmpc.cli import main
from dsmpc.config import parse_config
from dsmpc.errors import ConfigError
from dsmpc.export import (
    ResultBundle,
    aggregate_from_summaries,
    export_bundle,
    export_run,
    read_trajectory_csv,
    seed_summary,
    split_trajectory_columns,
    write_trajectory_csv,
)
from dsmpc.runtime import run
from dsmpc.shapes import ShapeKind


MINIMAL = """
[scenario]
name = "point_mass"
"""

SMALL_RUN = """
[scenario]
name = "point_mass"
mpc_steps = 3
horizon = 8

[optimizer]
method = "tsallis"
num_samples = 16
num_iterations = 2
elite_fraction = 0.4

[admm]
iterations = 1

[run]
mode = "distributed"
seeds = [1, 2]

[bounds]
num_samples = 40
trials = 20
eps1 = 0.3
eps2 = 1.0
lam = 5.0
gamma = 12.0
oracle_samples = 5000
"""


def write(tmp_path, text, name="config.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ---------------------------------------------------------------------------
# parsing


def test_minimal_config_gets_documented_defaults(tmp_path):
    spec = parse_config(write(tmp_path, MINIMAL))
    assert spec.name == "point_mass"
    assert spec.seeds == [0]
    assert spec.config.optimizer.num_samples == 64
    assert spec.config.optimizer.shape.kind is ShapeKind.EXPONENTIAL
    assert spec.config.mode.value == "distributed"


def test_seed_list_becomes_sweep_plan(tmp_path):
    spec = parse_config(write(tmp_path, SMALL_RUN))
    assert spec.seeds == [1, 2]
    assert spec.config_for_seed(7).seed == 7


def test_unknown_section_named(tmp_path):
    bad = MINIMAL + "\n[optimzer]\nnum_samples = 4\n"
    with pytest.raises(ConfigError, match="optimzer"):
        parse_config(write(tmp_path, bad))


def test_unknown_key_named_with_line(tmp_path):
    bad = MINIMAL + "\n[optimizer]\nnum_sample = 4\n"
    with pytest.raises(ConfigError, match=r"num_sample.*line"):
        parse_config(write(tmp_path, bad))


def test_type_mismatch_named(tmp_path):
    bad = MINIMAL + '\n[optimizer]\nnum_samples = "many"\n'
    with pytest.raises(ConfigError, match="num_samples"):
        parse_config(write(tmp_path, bad))


def test_unknown_scenario_key_rejected(tmp_path):
    bad = '[scenario]\nname = "point_mass"\nobstacle_radios = 0.5\n'
    with pytest.raises(ConfigError, match="obstacle_radios"):
        parse_config(write(tmp_path, bad))


def test_dynamics_kind_must_match_scenario(tmp_path):
    bad = MINIMAL + '\n[dynamics]\nkind = "dubins"\n'
    with pytest.raises(ConfigError, match="kind"):
        parse_config(write(tmp_path, bad))


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError):
        parse_config("/nonexistent/config.toml")


def test_stein_sample_count_validated(tmp_path):
    bad = (
        MINIMAL
        + "\n[optimizer]\nnum_samples = 10\n[optimizer.policy]\nkind = \"stein\"\n"
        + "num_particles = 2\nrollouts_per_particle = 4\n"
    )
    with pytest.raises(ConfigError, match="num_samples"):
        parse_config(write(tmp_path, bad))


def test_method_selects_shape_and_mode(tmp_path):
    text = MINIMAL + '\n[optimizer]\nmethod = "gradient_ss"\nlam = 2.0\n'
    spec = parse_config(write(tmp_path, text))
    assert spec.config.optimizer.update_mode.value == "gradient_ss"
    assert spec.config.optimizer.shape.lam == 2.0


# ---------------------------------------------------------------------------
# export


def small_record(tmp_path, seed=1):
    spec = parse_config(write(tmp_path, SMALL_RUN, name=f"cfg{seed}.toml"))
    return spec, run(spec.config_for_seed(seed))


def test_trajectory_roundtrip_exact(tmp_path):
    spec, record = small_record(tmp_path)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(record, spec.config.task, path)
    data, names = read_trajectory_csv(path)
    states, controls = split_trajectory_columns(spec.config.task, data)
    assert np.array_equal(states, record.states[:-1])
    assert np.array_equal(controls, record.controls)
    assert names[:2] == ["px", "py"]


def test_trajectory_rows_are_step_agent_pairs(tmp_path):
    spec, record = small_record(tmp_path)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(record, spec.config.task, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 3 * spec.config.task.num_agents


def test_empty_run_writes_header_only(tmp_path):
    text = SMALL_RUN.replace("mpc_steps = 3", "mpc_steps = 0")
    spec = parse_config(write(tmp_path, text))
    record = run(spec.config_for_seed(1))
    assert record.success
    path = tmp_path / "empty.csv"
    write_trajectory_csv(record, spec.config.task, path)
    assert len(path.read_text().splitlines()) == 1


def test_exports_are_byte_stable(tmp_path):
    spec, record = small_record(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    export_run(record, spec.config.task, a)
    export_run(record, spec.config.task, b)
    for name in ("trajectory.csv", "residuals.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_aggregates_recompute_exactly(tmp_path):
    spec, r1 = small_record(tmp_path, seed=1)
    _, r2 = small_record(tmp_path, seed=2)
    bundle = ResultBundle.from_records(spec.name, [r1, r2])
    recomputed = aggregate_from_summaries([seed_summary(r1), seed_summary(r2)])
    assert recomputed["mean_cost"] == bundle.mean_cost
    assert recomputed["cost_variance"] == bundle.cost_variance
    assert recomputed["success_rate"] == bundle.success_rate


def test_summary_json_excludes_wall_clock(tmp_path):
    spec, record = small_record(tmp_path)
    bundle = ResultBundle.from_records(spec.name, [record])
    export_bundle(bundle, tmp_path / "out")
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert "runtime" not in json.dumps(summary)
    timings = json.loads((tmp_path / "out" / "timings.json").read_text())
    assert "mean_step_runtime_seconds" in timings


# ---------------------------------------------------------------------------
# CLI


def test_cli_run_and_report(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_RUN)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    assert (out / "summary.json").exists()
    assert (out / "seed_1" / "trajectory.csv").exists()
    assert (out / "seed_2" / "residuals.csv").exists()
    assert (out / "config.toml").read_text() == SMALL_RUN

    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "point_mass" in text
    assert "MISMATCH" not in text


def test_cli_seed_offset(tmp_path):
    cfg = write(tmp_path, SMALL_RUN)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--seed-offset", "10"]) == 0
    assert (out / "seed_11" / "summary.json").exists()


def test_cli_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, SMALL_RUN)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["run", str(cfg), "--out", str(out1)]) == 0
    assert main(["run", str(cfg), "--out", str(out2)]) == 0
    for rel in ("summary.json", "seed_1/trajectory.csv", "seed_1/residuals.csv",
                "seed_1/summary.json", "seed_2/trajectory.csv"):
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel


def test_cli_sweep_runs_subdirectories(tmp_path):
    text = SMALL_RUN.replace('name = "point_mass"', 'name = "scaling"')
    text = text.replace("mpc_steps = 3", "mpc_steps = 2")
    cfg = write(tmp_path, text)
    out = tmp_path / "sweep"
    assert main(["run", str(cfg), "--out", str(out), "--sweep", "N=2,3"]) == 0
    assert (out / "N2" / "summary.json").exists()
    assert (out / "N3" / "summary.json").exists()


def test_cli_bad_config_exit_code(tmp_path):
    cfg = write(tmp_path, MINIMAL + "\n[optimizer]\nbogus = 1\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "x")]) == 2


def test_cli_verify_bounds(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_RUN)
    out = tmp_path / "vb"
    code = main(["verify-bounds", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert "mppi" in text and "tsallis" in text and "cem" in text
    assert code == 0
    reports = json.loads((out / "bounds_report.json").read_text())
    assert len(reports) == 3

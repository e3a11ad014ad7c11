import pytest

from conftest import HEADER, policy_rows, write_run, write_trajectory
from plot_companion.artifacts import SchemaError, load_bound_check, load_run, load_trajectory


def test_load_run_finds_policies(golden_fig3):
    run = load_run(golden_fig3 / "panel_a")
    assert set(run.trajectories) == {"zero_wait", "fixed_threshold", "online_rm"}
    assert run.h_star == 9.68
    assert run.model_label == "lognormal(mu=1, sigma=1)"
    online = run.trajectories["online_rm"]
    assert online.mean_gamma is not None
    assert online.time_mean is not None
    assert run.trajectories["zero_wait"].mean_gamma is None


def test_empty_trajectory_rejected(tmp_path):
    path = tmp_path / "p" / "trajectory.csv"
    write_trajectory(path, rows=[])
    with pytest.raises(SchemaError, match="no checkpoints"):
        load_trajectory(path, "p")
    path.write_text("")
    with pytest.raises(SchemaError, match="empty"):
        load_trajectory(path, "p")


def test_wrong_header_names_offending_column(tmp_path):
    path = tmp_path / "p" / "trajectory.csv"
    bad = ["checkpoint_k", "mean_h", "std_h_bar", "ci_lo", "ci_hi", "mean_gamma"]
    write_trajectory(path, rows=[[1, "1.0", "0.0", "1.0", "1.0", ""]], header=bad)
    with pytest.raises(SchemaError, match="mean_h_bar"):
        load_trajectory(path, "p")


def test_non_numeric_cell_rejected(tmp_path):
    path = tmp_path / "p" / "trajectory.csv"
    write_trajectory(path, rows=[[1, "oops", "0.0", "1.0", "1.0", ""]])
    with pytest.raises(SchemaError, match="mean_h_bar"):
        load_trajectory(path, "p")


def test_partially_blank_gamma_rejected(tmp_path):
    path = tmp_path / "p" / "trajectory.csv"
    write_trajectory(
        path,
        rows=[[1, "1.0", "0.0", "1.0", "1.0", "2.0"], [2, "1.0", "0.0", "1.0", "1.0", ""]],
    )
    with pytest.raises(SchemaError, match="partially blank"):
        load_trajectory(path, "p")


def test_run_without_trajectories_rejected(tmp_path):
    (tmp_path / "summary.json").write_text("{}")
    with pytest.raises(SchemaError, match="trajectory.csv"):
        load_run(tmp_path)


def test_time_length_mismatch_rejected(tmp_path):
    run_dir = write_run(tmp_path / "r", h_star=10.0, cost=0.0, mu=1.0, sigma=1.0)
    import json

    with open(run_dir / "summary.json") as fh:
        summary = json.load(fh)
    summary["policies"]["online_rm"]["checkpoint_time_mean"] = [1.0]
    with open(run_dir / "summary.json", "w") as fh:
        json.dump(summary, fh)
    with pytest.raises(SchemaError, match="checkpoint_time_mean"):
        load_run(run_dir)


def test_bound_check_loader(golden_bound_check):
    data = load_bound_check(golden_bound_check)
    assert data.checkpoints.tolist() == [1, 10, 100, 1000, 10000]
    assert data.gamma_star == pytest.approx(6.908)


def test_bound_check_missing_key(tmp_path):
    (tmp_path / "bound_check.json").write_text('{"checkpoints": [1]}')
    with pytest.raises(SchemaError, match="mean_gamma_sq"):
        load_bound_check(tmp_path)

import csv
import json
from pathlib import Path

import pytest

HEADER = ["checkpoint_k", "mean_h_bar", "std_h_bar", "ci_lo", "ci_hi", "mean_gamma"]

CHECKPOINTS = [1, 10, 100, 1000, 10000]


def write_trajectory(path: Path, rows, header=None):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header or HEADER)
        writer.writerows(rows)


def policy_rows(level, gamma=None):
    """Plausible converging curve around the given cost level."""
    rows = []
    for i, k in enumerate(CHECKPOINTS):
        mean = level * (1.0 + 0.5 / (i + 1))
        std = level * 0.2 / (i + 1)
        ci = 1.96 * std / (50**0.5)
        g = "" if gamma is None else repr(gamma * (1.0 - 0.3 / (i + 1)))
        rows.append([k, repr(mean), repr(std), repr(mean - ci), repr(mean + ci), g])
    return rows


def write_run(run_dir: Path, h_star: float, cost: float, mu: float, sigma: float):
    run_dir.mkdir(parents=True, exist_ok=True)
    policies = {}
    for name, gamma in [("zero_wait", None), ("fixed_threshold", None), ("online_rm", h_star / 2)]:
        level = h_star * (1.6 if name == "zero_wait" else 1.0)
        write_trajectory(run_dir / name / "trajectory.csv", policy_rows(level, gamma))
        policies[name] = {
            "adaptive": name == "online_rm",
            "final_h_bar_mean": level,
            "final_h_bar_std": 0.1,
            "checkpoint_time_mean": [k * 4.5 for k in CHECKPOINTS],
        }
    summary = {
        "config": {
            "model": {"kind": "lognormal", "mu": mu, "sigma": sigma},
            "cost": cost,
            "frames": CHECKPOINTS[-1],
            "reps": 50,
        },
        "gamma_star": h_star / 2,
        "h_star": h_star,
        "policies": policies,
    }
    with open(run_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return run_dir


@pytest.fixture
def golden_fig3(tmp_path):
    parent = tmp_path / "fig3_runs"
    write_run(parent / "panel_a", h_star=9.68, cost=0.0, mu=1.0, sigma=1.0)
    write_run(parent / "panel_b", h_star=30.07, cost=0.0, mu=1.0, sigma=1.5)
    write_run(parent / "panel_c", h_star=81.73, cost=0.0, mu=2.0, sigma=1.5)
    return parent


@pytest.fixture
def golden_fig4(tmp_path):
    parent = tmp_path / "fig4_runs"
    write_run(parent / "c0", h_star=30.07, cost=0.0, mu=1.0, sigma=1.5)
    write_run(parent / "c5", h_star=30.27, cost=5.0, mu=1.0, sigma=1.5)
    write_run(parent / "c20", h_star=30.87, cost=20.0, mu=1.0, sigma=1.5)
    return parent


@pytest.fixture
def golden_bound_check(tmp_path):
    out = tmp_path / "bc"
    out.mkdir()
    ks = CHECKPOINTS
    payload = {
        "checkpoints": ks,
        "mean_gamma_sq": [120.0 / k for k in ks],
        "gamma_envelope": [6.09e6 / k for k in ks],
        "mean_h_gap": [5.0 / k if k > 1 else -3.4 for k in ks],
        "h_gap_envelope": [1.06e6 * (1 + __import__("math").log(k)) / k for k in ks],
        "gamma_star": 6.908,
        "h_star": 12.673,
        "reps": 200,
    }
    with open(out / "bound_check.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return out

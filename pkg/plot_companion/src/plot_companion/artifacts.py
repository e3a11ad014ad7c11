"""Loaders and schema validation for the harness's output files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ["checkpoint_k", "mean_h_bar", "std_h_bar", "ci_lo", "ci_hi", "mean_gamma"]

BOUND_CHECK_KEYS = [
    "checkpoints",
    "mean_gamma_sq",
    "gamma_envelope",
    "mean_h_gap",
    "h_gap_envelope",
    "gamma_star",
    "h_star",
]


class SchemaError(ValueError):
    """Input file does not match the documented artifact schema."""


@dataclass(frozen=True)
class Trajectory:
    """One policy's aggregated checkpoint curve."""

    policy: str
    checkpoint_k: np.ndarray
    mean_h_bar: np.ndarray
    std_h_bar: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    mean_gamma: np.ndarray | None  # None for non-adaptive policies
    time_mean: np.ndarray | None = None  # from summary.json, if present


@dataclass(frozen=True)
class RunArtifacts:
    """Everything one experiment directory provides."""

    path: Path
    summary: dict
    trajectories: dict[str, Trajectory]

    @property
    def h_star(self) -> float | None:
        return self.summary.get("h_star")

    @property
    def cost(self) -> float | None:
        return self.summary.get("config", {}).get("cost")

    @property
    def model_label(self) -> str:
        model = self.summary.get("config", {}).get("model", {})
        kind = model.get("kind", "?")
        params = ", ".join(f"{k}={v:g}" for k, v in model.items() if k != "kind")
        return f"{kind}({params})"


def load_trajectory(path: Path, policy: str) -> Trajectory:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: empty trajectory file")
    header = rows[0]
    if header != TRAJECTORY_COLUMNS:
        missing = [c for c in TRAJECTORY_COLUMNS if c not in header]
        extra = [c for c in header if c not in TRAJECTORY_COLUMNS]
        problem = missing[0] if missing else (extra[0] if extra else "column order")
        raise SchemaError(
            f"{path}: bad trajectory header (offending column: {problem!r}); "
            f"expected {TRAJECTORY_COLUMNS}, got {header}"
        )
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: trajectory has a header but no checkpoints")

    def column(i: int, name: str) -> np.ndarray:
        try:
            return np.array([float(row[i]) for row in body])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: bad value in column {name!r}: {exc}") from exc

    ks = column(0, "checkpoint_k")
    gamma_cells = [row[5] if len(row) > 5 else "" for row in body]
    has_gamma = any(cell != "" for cell in gamma_cells)
    if has_gamma and not all(cell != "" for cell in gamma_cells):
        raise SchemaError(f"{path}: column 'mean_gamma' is partially blank")
    return Trajectory(
        policy=policy,
        checkpoint_k=ks.astype(np.int64),
        mean_h_bar=column(1, "mean_h_bar"),
        std_h_bar=column(2, "std_h_bar"),
        ci_lo=column(3, "ci_lo"),
        ci_hi=column(4, "ci_hi"),
        mean_gamma=column(5, "mean_gamma") if has_gamma else None,
    )


def load_run(run_dir: str | Path) -> RunArtifacts:
    """Load summary.json plus every <policy>/trajectory.csv under one directory."""
    run_dir = Path(run_dir)
    summary_path = run_dir / "summary.json"
    try:
        with open(summary_path) as fh:
            summary = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {summary_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{summary_path}: not valid JSON: {exc}") from exc

    trajectories: dict[str, Trajectory] = {}
    for csv_path in sorted(run_dir.glob("*/trajectory.csv")):
        policy = csv_path.parent.name
        traj = load_trajectory(csv_path, policy)
        times = summary.get("policies", {}).get(policy, {}).get("checkpoint_time_mean")
        if times is not None:
            if len(times) != traj.checkpoint_k.size:
                raise SchemaError(
                    f"{summary_path}: checkpoint_time_mean length {len(times)} does not match "
                    f"{csv_path} ({traj.checkpoint_k.size} checkpoints)"
                )
            traj = Trajectory(
                policy=traj.policy,
                checkpoint_k=traj.checkpoint_k,
                mean_h_bar=traj.mean_h_bar,
                std_h_bar=traj.std_h_bar,
                ci_lo=traj.ci_lo,
                ci_hi=traj.ci_hi,
                mean_gamma=traj.mean_gamma,
                time_mean=np.array(times, dtype=float),
            )
        trajectories[policy] = traj
    if not trajectories:
        raise SchemaError(f"{run_dir}: no <policy>/trajectory.csv files found")
    return RunArtifacts(path=run_dir, summary=summary, trajectories=trajectories)


@dataclass(frozen=True)
class BoundCheckData:
    path: Path
    checkpoints: np.ndarray
    mean_gamma_sq: np.ndarray
    gamma_envelope: np.ndarray
    mean_h_gap: np.ndarray
    h_gap_envelope: np.ndarray
    gamma_star: float
    h_star: float


def load_bound_check(path_or_dir: str | Path) -> BoundCheckData:
    path = Path(path_or_dir)
    if path.is_dir():
        path = path / "bound_check.json"
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    for key in BOUND_CHECK_KEYS:
        if key not in payload:
            raise SchemaError(f"{path}: missing key {key!r}")
    arrays = {
        key: np.asarray(payload[key], dtype=float)
        for key in ("checkpoints", "mean_gamma_sq", "gamma_envelope", "mean_h_gap", "h_gap_envelope")
    }
    n = arrays["checkpoints"].size
    if n == 0:
        raise SchemaError(f"{path}: no checkpoints")
    for key, arr in arrays.items():
        if arr.size != n:
            raise SchemaError(f"{path}: key {key!r} has {arr.size} entries, expected {n}")
    return BoundCheckData(
        path=path,
        checkpoints=arrays["checkpoints"].astype(np.int64),
        mean_gamma_sq=arrays["mean_gamma_sq"],
        gamma_envelope=arrays["gamma_envelope"],
        mean_h_gap=arrays["mean_h_gap"],
        h_gap_envelope=arrays["h_gap_envelope"],
        gamma_star=float(payload["gamma_star"]),
        h_star=float(payload["h_star"]),
    )

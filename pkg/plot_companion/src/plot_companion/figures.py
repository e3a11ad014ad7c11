"""Figure assembly. Deterministic output: fixed style, pinned PNG metadata."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from plot_companion.artifacts import RunArtifacts, SchemaError, load_bound_check, load_run

POLICY_STYLE = {
    "zero_wait": dict(color="#999999", ls="--", label="zero wait"),
    "fixed_threshold": dict(color="#1f77b4", ls="-", label="offline optimal"),
    "online_rm": dict(color="#d62728", ls="-", label="online"),
}
PNG_METADATA = {"Software": "plot-companion"}


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: figure kind, where the inputs live, where the image goes."""

    kind: str  # fig3 | fig4 | regret
    inputs: Path
    output: Path
    x_axis: str = "frames"  # frames | time
    dpi: int = 120
    extra: dict = field(default_factory=dict)


def _discover_runs(parent: Path) -> list[RunArtifacts]:
    parent = Path(parent)
    if (parent / "summary.json").exists():
        return [load_run(parent)]
    runs = [load_run(d) for d in sorted(parent.iterdir()) if (d / "summary.json").exists()]
    if not runs:
        raise SchemaError(f"{parent}: no run directories with summary.json found")
    return runs


def _x_values(traj, x_axis: str) -> np.ndarray:
    if x_axis == "time":
        if traj.time_mean is None:
            raise SchemaError(
                f"policy {traj.policy!r}: summary.json carries no checkpoint_time_mean, "
                "cannot plot against time"
            )
        return traj.time_mean
    return traj.checkpoint_k.astype(float)


def _draw_run(ax, run: RunArtifacts, x_axis: str, label_prefix: str = "") -> None:
    for policy, traj in sorted(run.trajectories.items()):
        style = dict(POLICY_STYLE.get(policy, dict(color="#2ca02c", ls="-", label=policy)))
        style["label"] = label_prefix + style.get("label", policy)
        x = _x_values(traj, x_axis)
        ax.plot(x, traj.mean_h_bar, lw=1.5, **style)
        ax.fill_between(x, traj.ci_lo, traj.ci_hi, color=style["color"], alpha=0.2, lw=0)
    if run.h_star is not None:
        ax.axhline(run.h_star, color="black", lw=1.0, ls=":", label="optimal cost")
    ax.set_xscale("log")
    ax.set_xlabel("frames" if x_axis == "frames" else "time")


def render_fig3(spec: PlotSpec) -> Path:
    """Three-panel average-cost-vs-horizon figure, one panel per delay model."""
    runs = _discover_runs(spec.inputs)
    fig, axes = plt.subplots(1, len(runs), figsize=(4.2 * len(runs), 3.4), squeeze=False)
    for ax, run in zip(axes[0], runs):
        _draw_run(ax, run, spec.x_axis)
        ax.set_title(run.model_label, fontsize=10)
    axes[0][0].set_ylabel("time-average cost")
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, spec)


def render_fig4(spec: PlotSpec) -> Path:
    """Average cost vs frames for several sampling costs, one axes."""
    runs = _discover_runs(spec.inputs)
    runs.sort(key=lambda r: (r.cost is None, r.cost))
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    for run in runs:
        prefix = f"C={run.cost:g}: " if run.cost is not None else ""
        _draw_run(ax, run, spec.x_axis, label_prefix=prefix)
    ax.set_ylabel("time-average cost")
    # de-duplicate the optimal-cost legend entries
    handles, labels = ax.get_legend_handles_labels()
    seen: dict[str, object] = {}
    for h, l in zip(handles, labels):
        seen.setdefault(l, h)
    ax.legend(seen.values(), seen.keys(), fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, spec)


def render_regret(spec: PlotSpec) -> Path:
    """Log-log decay of the learner's error with its theoretical envelopes."""
    data = load_bound_check(spec.inputs)
    ks = data.checkpoints.astype(float)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.6))

    ax1.loglog(ks, data.gamma_envelope, color="black", ls="--", lw=1.2, label="1/k envelope")
    pos = data.mean_gamma_sq > 0
    ax1.loglog(
        ks[pos], data.mean_gamma_sq[pos], "o", ms=3.5, color="#d62728", label="mean sq. threshold error"
    )
    ax1.set_xlabel("frame k")
    ax1.set_ylabel("squared threshold error")
    ax1.legend(fontsize=8)

    ax2.loglog(ks, data.h_gap_envelope, color="black", ls="--", lw=1.2, label="(1+ln k)/k envelope")
    pos = data.mean_h_gap > 0
    ax2.loglog(ks[pos], data.mean_h_gap[pos], "s", ms=3.5, color="#1f77b4", label="mean cost gap")
    if not pos.all():
        ax2.set_title("non-positive gap points omitted", fontsize=8)
    ax2.set_xlabel("frame k")
    ax2.set_ylabel("average-cost gap")
    ax2.legend(fontsize=8)

    fig.tight_layout()
    return _save(fig, spec)


_RENDERERS = {"fig3": render_fig3, "fig4": render_fig4, "regret": render_regret}


def render(spec: PlotSpec) -> Path:
    """Render one figure; raises SchemaError on malformed inputs, writes nothing then."""
    try:
        renderer = _RENDERERS[spec.kind]
    except KeyError:
        raise SchemaError(f"unknown figure kind {spec.kind!r} (expected fig3, fig4, regret)") from None
    return renderer(spec)


def _save(fig, spec: PlotSpec) -> Path:
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=spec.dpi, metadata=PNG_METADATA)
    plt.close(fig)
    return out

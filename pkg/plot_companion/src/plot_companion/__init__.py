"""Figure renderer for aoi-sampling experiment artifacts.

Pure post-processing: reads trajectory.csv / summary.json / bound_check.json
files written by the simulation harness and draws them. Never re-simulates.
"""

from plot_companion.artifacts import (
    BoundCheckData,
    RunArtifacts,
    SchemaError,
    Trajectory,
    load_bound_check,
    load_run,
)
from plot_companion.figures import PlotSpec, render

__all__ = [
    "BoundCheckData",
    "PlotSpec",
    "RunArtifacts",
    "SchemaError",
    "Trajectory",
    "load_bound_check",
    "load_run",
    "render",
]

"""Toolkit for timely status-update sampling over a random-delay channel.

Computes optimal waiting thresholds when the delay distribution is known,
runs an online threshold learner when it is not, and verifies the learner's
convergence bounds by Monte-Carlo simulation.
"""

from aoi_sampling.delay_models import (
    Constant,
    DelayModel,
    Empirical,
    Exponential,
    LogNormal,
    MomentBounds,
    QuadratureError,
    TruncatedLogNormal,
    Uniform,
    derive_seed,
)
from aoi_sampling.offline_solver import (
    SolverConfig,
    SolverNonConvergence,
    SolverResult,
    gamma_bounds,
    policy_cost,
    solve_fixed_point,
    t_map,
)
from aoi_sampling.policies import (
    FixedThreshold,
    OnlineRm,
    OnlineRmState,
    Policy,
    ZeroWait,
    make_policy,
    rm_step,
    step_size,
    threshold_decide,
)
from aoi_sampling.sim_engine import (
    FrameRecord,
    RunSummary,
    frame_aoi_area,
    reconstruct_aoi_curve,
    regret_diagnostics,
    run,
)

__all__ = [
    "Constant",
    "DelayModel",
    "Empirical",
    "Exponential",
    "FixedThreshold",
    "FrameRecord",
    "LogNormal",
    "MomentBounds",
    "OnlineRm",
    "OnlineRmState",
    "Policy",
    "QuadratureError",
    "RunSummary",
    "SolverConfig",
    "SolverNonConvergence",
    "SolverResult",
    "TruncatedLogNormal",
    "Uniform",
    "ZeroWait",
    "derive_seed",
    "frame_aoi_area",
    "gamma_bounds",
    "make_policy",
    "policy_cost",
    "reconstruct_aoi_curve",
    "regret_diagnostics",
    "rm_step",
    "run",
    "solve_fixed_point",
    "step_size",
    "t_map",
    "threshold_decide",
]

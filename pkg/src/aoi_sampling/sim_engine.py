"""Frame-based renewal simulation with exact per-frame age accounting.

Each frame runs from one sample's generation epoch to the next. The age
integral over frame k is the parallelogram-plus-triangle area
``L_{k-1} * D_k + 0.5 * L_k^2`` with the first frame carrying no
parallelogram term (nothing was in flight before it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from aoi_sampling.delay_models import DelayModel, MomentBounds
from aoi_sampling.offline_solver import gamma_bounds
from aoi_sampling.policies import FixedThreshold, OnlineRm, OnlineRmState, Policy, ZeroWait


def frame_aoi_area(l_prev: float, d: float, l: float) -> float:
    """Cumulative age over one frame given the previous frame's length."""
    return l_prev * d + 0.5 * l * l


def checkpoint_indices(frames: int, factor: float = 1.25) -> np.ndarray:
    """Frame indices at which trajectories are recorded.

    Geometric spacing (rounded, deduplicated) so trajectory files stay small
    for million-frame runs, plus every power of ten and the final frame.
    """
    if frames < 1:
        raise ValueError(f"need at least one frame, got {frames}")
    if factor <= 1.0:
        raise ValueError(f"checkpoint factor must be > 1, got {factor}")
    ks = {frames}
    x = 1.0
    while x <= frames:
        ks.add(int(round(x)))
        x *= factor
    decade = 1
    while decade <= frames:
        ks.add(decade)
        decade *= 10
    return np.array(sorted(k for k in ks if 1 <= k <= frames), dtype=np.int64)


@dataclass(frozen=True)
class FrameRecord:
    """One renewal frame of the simulation trace."""

    k: int
    d: float
    w: float
    l: float
    x: float
    y: float
    gamma: float
    t_start: float


@dataclass(frozen=True)
class RunSummary:
    frames: int
    sum_l: float
    sum_x: float
    sum_y: float
    checkpoints: tuple[int, ...]
    h_bar_trajectory: tuple[float, ...]
    aoi_time_avg_trajectory: tuple[float, ...]
    gamma_trajectory: tuple[float, ...]
    time_trajectory: tuple[float, ...]
    seed: int

    @property
    def h_bar(self) -> float:
        """Final cumulative cost per unit time."""
        return self.sum_y / self.sum_l

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "sum_l": self.sum_l,
            "sum_x": self.sum_x,
            "sum_y": self.sum_y,
            "h_bar": self.h_bar,
            "seed": self.seed,
            "checkpoints": list(self.checkpoints),
            "h_bar_trajectory": list(self.h_bar_trajectory),
            "aoi_time_avg_trajectory": list(self.aoi_time_avg_trajectory),
            "gamma_trajectory": list(self.gamma_trajectory),
            "time_trajectory": list(self.time_trajectory),
        }


class RunResult(NamedTuple):
    summary: RunSummary
    trace: list[FrameRecord] | None


def _decide_all(policy: Policy, delays: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Waiting times and in-force thresholds for a whole delay stream.

    The two stationary policies vectorize; the online learner runs its exact
    per-frame recursion (it is causally sequential). Any other Policy gets
    the generic one-call-per-frame path.
    """
    n = delays.shape[0]
    if type(policy) in (ZeroWait, FixedThreshold):
        g = policy.gamma
        gammas = np.full(n, g)
        w = np.maximum(g - delays, 0.0)
        return w, gammas
    if type(policy) is OnlineRm:
        # inlined rm_step recursion on plain floats for speed;
        # equivalence with rm_step is pinned by tests
        st = policy.state
        g, k = st.gamma, st.k
        g_lb, g_ub, d_lb, c = st.gamma_lb, st.gamma_ub, st.d_lb, st.c
        scale = policy.step_scale
        w_out = np.empty(n)
        g_out = np.empty(n)
        for i, d in enumerate(delays.tolist()):
            g_out[i] = g
            w = g - d
            if w < 0.0:
                w = 0.0
            w_out[i] = w
            l = d + w
            r = 0.5 * l * l + c
            eta = scale * (0.5 / d_lb if k == 1 else 1.0 / ((k + 2.0) * d_lb))
            g = g + eta * (r - g * l)
            if g > g_ub:
                g = g_ub
            elif g < g_lb:
                g = g_lb
            k += 1
        policy.state = OnlineRmState(gamma=g, k=k, gamma_lb=g_lb, gamma_ub=g_ub, d_lb=d_lb, c=c)
        return w_out, g_out
    w_out = np.empty(n)
    g_out = np.empty(n)
    for i, d in enumerate(delays.tolist()):
        g_out[i] = policy.gamma
        w_out[i] = policy.decide(d)
    return w_out, g_out


def run(
    model: DelayModel,
    policy: Policy,
    frames: int,
    c: float,
    seed: int,
    collect_trace: bool = False,
    checkpoint_factor: float = 1.25,
) -> RunResult:
    """Simulate ``frames`` renewal frames and return checkpointed trajectories.

    Deterministic given the seed: the same (model, policy parameters, frames,
    cost, seed) tuple reproduces the summary bit for bit.
    """
    if frames < 1:
        raise ValueError(f"need at least one frame, got {frames}")
    if c < 0:
        raise ValueError(f"sampling cost must be >= 0, got {c}")
    rng = np.random.default_rng(seed)
    delays = model.sample_n(rng, frames)

    w, gammas = _decide_all(policy, delays)
    lengths = delays + w
    l_prev = np.empty(frames)
    l_prev[0] = 0.0
    l_prev[1:] = lengths[:-1]
    x = l_prev * delays + 0.5 * lengths * lengths

    cum_l = np.cumsum(lengths)
    cum_x = np.cumsum(x)
    ks = checkpoint_indices(frames, checkpoint_factor)
    cum_y_at = cum_x[ks - 1] + c * ks
    h_bar = cum_y_at / cum_l[ks - 1]
    aoi_avg = cum_x[ks - 1] / cum_l[ks - 1]

    summary = RunSummary(
        frames=frames,
        sum_l=float(cum_l[-1]),
        sum_x=float(cum_x[-1]),
        sum_y=float(cum_x[-1] + c * frames),
        checkpoints=tuple(int(k) for k in ks),
        h_bar_trajectory=tuple(h_bar.tolist()),
        aoi_time_avg_trajectory=tuple(aoi_avg.tolist()),
        gamma_trajectory=tuple(gammas[ks - 1].tolist()),
        time_trajectory=tuple(cum_l[ks - 1].tolist()),
        seed=seed,
    )
    trace: list[FrameRecord] | None = None
    if collect_trace:
        starts = np.empty(frames)
        starts[0] = 0.0
        starts[1:] = cum_l[:-1]
        trace = [
            FrameRecord(k=i + 1, d=di, w=wi, l=li, x=xi, y=xi + c, gamma=gi, t_start=si)
            for i, (di, wi, li, xi, gi, si) in enumerate(
                zip(
                    delays.tolist(),
                    w.tolist(),
                    lengths.tolist(),
                    x.tolist(),
                    gammas.tolist(),
                    starts.tolist(),
                )
            )
        ]
    return RunResult(summary, trace)


def reconstruct_aoi_curve(trace: Sequence[FrameRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild the sawtooth age curve from a full trace.

    Returns breakpoints (t, a) whose linear interpolation is the exact curve:
    slope-one segments with a downward jump to the fresh delay at every
    reception epoch. The first frame has no jump (there is no stale sample to
    replace), so the curve starts at age zero and climbs.
    """
    if not trace:
        raise ValueError("empty trace")
    ts: list[float] = [trace[0].t_start]
    ages: list[float] = [0.0]
    prev_start = trace[0].t_start
    for rec in trace:
        recv = rec.t_start + rec.d
        if rec.k > 1:
            ts.append(recv)
            ages.append(recv - prev_start)
            ts.append(recv)
            ages.append(rec.d)
        prev_start = rec.t_start
    last = trace[-1]
    ts.append(last.t_start + last.l)
    ages.append(last.l)
    return np.array(ts), np.array(ages)


@dataclass(frozen=True)
class RegretDiagnostics:
    """Per-checkpoint comparison of one run against the offline optimum.

    ``drift_sum`` is the running sum of the learner's update residuals
    ``R_k - gamma_star * L_k``, the quantity whose conditional mean vanishes
    exactly at the optimal threshold. Envelope entries are None when the
    model is uncapped (the theoretical constants need a finite delay bound).
    """

    checkpoints: tuple[int, ...]
    gamma_sq_err: tuple[float, ...]
    gamma_sq_sum: tuple[float, ...]
    drift_sum: tuple[float, ...]
    h_gap: tuple[float, ...]
    gamma_envelope: tuple[float, ...] | None
    h_gap_envelope: tuple[float, ...] | None


def regret_envelopes(
    ks: np.ndarray, bounds: MomentBounds, cap: float, mean_delay: float, c: float
) -> tuple[np.ndarray, np.ndarray]:
    """Theoretical decay envelopes for a capped delay: 1/k for the squared
    threshold error, (1+ln k)/k for the average-cost gap."""
    g_ub = gamma_bounds(bounds, c)[1]
    l_ub = cap + g_ub
    const = (l_ub**2 + c) ** 2 / bounds.d_lb**2
    kf = ks.astype(float)
    return const / kf, const / mean_delay * (1.0 + np.log(kf)) / kf


def regret_diagnostics(
    trace: Sequence[FrameRecord],
    gamma_star: float,
    h_star: float,
    c: float,
    bounds: MomentBounds | None = None,
    cap: float | None = None,
    mean_delay: float | None = None,
    checkpoint_factor: float = 1.25,
) -> RegretDiagnostics:
    """Regret diagnostics for one traced run against solver references."""
    if not trace:
        raise ValueError("empty trace")
    d = np.array([r.d for r in trace])
    l = np.array([r.l for r in trace])
    y = np.array([r.y for r in trace])
    g = np.array([r.gamma for r in trace])
    n = len(trace)
    ks = checkpoint_indices(n, checkpoint_factor)

    gamma_sq = (g - gamma_star) ** 2
    cum_gamma_sq = np.cumsum(gamma_sq)
    r_k = 0.5 * l * l + c
    cum_drift = np.cumsum(r_k - gamma_star * l)
    h_gap = np.cumsum(y)[ks - 1] / np.cumsum(l)[ks - 1] - h_star

    env_gamma = env_h = None
    if bounds is not None and cap is not None and math.isfinite(cap):
        if mean_delay is None:
            raise ValueError("envelopes need the model's mean delay")
        eg, eh = regret_envelopes(ks, bounds, cap, mean_delay, c)
        env_gamma = tuple(eg.tolist())
        env_h = tuple(eh.tolist())

    return RegretDiagnostics(
        checkpoints=tuple(int(k) for k in ks),
        gamma_sq_err=tuple(gamma_sq[ks - 1].tolist()),
        gamma_sq_sum=tuple(cum_gamma_sq[ks - 1].tolist()),
        drift_sum=tuple(cum_drift[ks - 1].tolist()),
        h_gap=tuple(h_gap.tolist()),
        gamma_envelope=env_gamma,
        h_gap_envelope=env_h,
    )

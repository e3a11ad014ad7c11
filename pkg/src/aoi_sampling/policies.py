"""Sampling policies: zero-wait, fixed threshold, and the online learner.

A policy sees the delay of the packet it just sent and answers with how
long to idle before sampling again. The online learner keeps a running
threshold estimate and nudges it with a clipped stochastic-approximation
update after every frame, using only observed delays and the a-priori
moment bounds.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, replace
from typing import Any, ClassVar, NamedTuple

import numpy as np

from aoi_sampling.delay_models import MomentBounds
from aoi_sampling.offline_solver import gamma_bounds


def threshold_decide(gamma: float, d: float) -> float:
    """Waiting time of the threshold policy: idle until age-at-send reaches gamma."""
    return max(gamma - d, 0.0)


def step_size(k: int, d_lb: float) -> float:
    """Diminishing step size for frame k (1-indexed)."""
    if k < 1:
        raise ValueError(f"frame counter starts at 1, got {k}")
    if d_lb <= 0:
        raise ValueError(f"d_lb must be positive, got {d_lb}")
    if k == 1:
        return 1.0 / (2.0 * d_lb)
    return 1.0 / ((k + 2.0) * d_lb)


@dataclass(frozen=True)
class OnlineRmState:
    """Learner state: current threshold, frame counter, clip interval."""

    gamma: float
    k: int
    gamma_lb: float
    gamma_ub: float
    d_lb: float
    c: float

    def __post_init__(self) -> None:
        if not (self.gamma_lb <= self.gamma <= self.gamma_ub):
            raise ValueError(
                f"gamma {self.gamma} outside clip interval [{self.gamma_lb}, {self.gamma_ub}]"
            )
        if self.k < 1:
            raise ValueError(f"frame counter starts at 1, got {self.k}")
        if self.d_lb <= 0:
            raise ValueError(f"d_lb must be positive, got {self.d_lb}")
        if self.c < 0:
            raise ValueError(f"sampling cost must be >= 0, got {self.c}")


class RmStepResult(NamedTuple):
    w: float
    l: float
    r: float
    state: OnlineRmState


def rm_step(state: OnlineRmState, d: float, eta_scale: float = 1.0) -> RmStepResult:
    """Advance the learner by one frame after observing delay ``d``.

    Returns the waiting time, the frame length and reward (kept for trace
    logging), and the post-update state with the threshold clipped back into
    its interval. ``eta_scale`` rescales the step size; it exists as a test
    hook so bound checks can be driven to failure on purpose.
    """
    w = threshold_decide(state.gamma, d)
    l = d + w
    r = 0.5 * l * l + state.c
    eta = eta_scale * step_size(state.k, state.d_lb)
    raw = state.gamma + eta * (r - state.gamma * l)
    clipped = min(state.gamma_ub, max(state.gamma_lb, raw))
    return RmStepResult(w, l, r, replace(state, gamma=clipped, k=state.k + 1))


class Policy(abc.ABC):
    """Stateful waiting-time decision rule, owned by a single run."""

    adaptive: ClassVar[bool] = False

    @property
    @abc.abstractmethod
    def gamma(self) -> float:
        """Threshold currently in force."""

    @abc.abstractmethod
    def decide(self, d: float) -> float:
        """Waiting time for the frame whose delay was ``d``; advances state."""


class ZeroWait(Policy):
    """Sample again the moment the previous packet is acknowledged."""

    @property
    def gamma(self) -> float:
        return 0.0

    def decide(self, d: float) -> float:
        return 0.0


class FixedThreshold(Policy):
    """Stationary threshold policy with a fixed gamma."""

    def __init__(self, gamma: float):
        if gamma < 0:
            raise ValueError(f"threshold must be >= 0, got {gamma}")
        self._gamma = float(gamma)

    @property
    def gamma(self) -> float:
        return self._gamma

    def decide(self, d: float) -> float:
        return threshold_decide(self._gamma, d)


class OnlineRm(Policy):
    """Online threshold learner over the interval implied by the moment bounds.

    The initial threshold is the interval midpoint by default; pass
    ``init="random"`` with an ``init_seed`` to draw it uniformly instead.
    """

    adaptive = True

    def __init__(
        self,
        bounds: MomentBounds,
        c: float,
        gamma0: float | None = None,
        init: str = "midpoint",
        init_seed: int | None = None,
        step_scale: float = 1.0,
    ):
        g_lb, g_ub = gamma_bounds(bounds, c)
        if gamma0 is None:
            if init == "midpoint":
                gamma0 = 0.5 * (g_lb + g_ub)
            elif init == "random":
                if init_seed is None:
                    raise ValueError("init='random' requires init_seed")
                gamma0 = float(np.random.default_rng(init_seed).uniform(g_lb, g_ub))
            else:
                raise ValueError(f"unknown init {init!r} (expected 'midpoint' or 'random')")
        if step_scale <= 0:
            raise ValueError(f"step_scale must be positive, got {step_scale}")
        self.step_scale = float(step_scale)
        self.state = OnlineRmState(
            gamma=float(gamma0), k=1, gamma_lb=g_lb, gamma_ub=g_ub, d_lb=bounds.d_lb, c=c
        )

    @property
    def gamma(self) -> float:
        return self.state.gamma

    def decide(self, d: float) -> float:
        res = rm_step(self.state, d, self.step_scale)
        self.state = res.state
        return res.w


def make_policy(
    spec: dict[str, Any],
    bounds: MomentBounds | None = None,
    c: float = 0.0,
) -> Policy:
    """Build a policy from its JSON-style spec.

    ``{"kind": "zero_wait"}``, ``{"kind": "fixed_threshold", "gamma": g}``,
    or ``{"kind": "online_rm", ...}`` (which needs the moment bounds).
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "zero_wait":
        if spec:
            raise ValueError(f"zero_wait takes no parameters, got {sorted(spec)}")
        return ZeroWait()
    if kind == "fixed_threshold":
        if "gamma" not in spec:
            raise ValueError("fixed_threshold needs 'gamma'")
        return FixedThreshold(float(spec.pop("gamma")))
    if kind == "online_rm":
        if bounds is None:
            raise ValueError("online_rm needs moment bounds")
        allowed = {"gamma0", "init", "init_seed", "step_scale"}
        unknown = set(spec) - allowed
        if unknown:
            raise ValueError(f"unknown online_rm parameters: {sorted(unknown)}")
        return OnlineRm(bounds, c, **spec)
    raise ValueError(f"unknown policy kind {kind!r}")

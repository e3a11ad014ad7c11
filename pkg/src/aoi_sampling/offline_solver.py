"""Optimal waiting threshold when the delay distribution is known.

The long-run cost of the threshold-gamma policy is
``(0.5 * E[max{D,g}^2] + C) / E[max{D,g}] + E[D]``, and the optimal
threshold is the unique fixed point of the self-map
``T(g) = (0.5 * E[max{D,g}^2] + C) / E[max{D,g}]``, found here by direct
iteration, which contracts toward the fixed point from either side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from aoi_sampling.delay_models import DelayModel, MomentBounds, validate_bounds


class SolverNonConvergence(RuntimeError):
    """Fixed-point iteration hit the iteration cap before meeting delta."""

    def __init__(self, message: str, last_gamma: float, residual: float, iterations: int):
        super().__init__(message)
        self.last_gamma = last_gamma
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule for the fixed-point iteration."""

    delta: float = 1e-9
    max_iter: int = 10_000
    gamma0: float | None = None

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class SolverResult:
    gamma_star: float
    iterations: int
    residual: float
    h_star: float
    gamma_lb: float
    gamma_ub: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "gamma_star": self.gamma_star,
            "h_star": self.h_star,
            "iterations": self.iterations,
            "residual": self.residual,
            "gamma_lb": self.gamma_lb,
            "gamma_ub": self.gamma_ub,
            "warnings": list(self.warnings),
        }


def gamma_bounds(bounds: MomentBounds, c: float) -> tuple[float, float]:
    """Interval guaranteed to contain the optimal threshold.

    Lower: half the mean-delay lower bound. Upper: the zero-wait cost ratio
    evaluated at the most pessimistic moments, ``(0.5*m_ub + C) / d_lb``.
    """
    if c < 0:
        raise ValueError(f"sampling cost must be >= 0, got {c}")
    return 0.5 * bounds.d_lb, (0.5 * bounds.m_ub + c) / bounds.d_lb


def t_map(model: DelayModel, gamma: float, c: float) -> float:
    """One application of the cost-ratio map T at threshold ``gamma``."""
    if c < 0:
        raise ValueError(f"sampling cost must be >= 0, got {c}")
    return (0.5 * model.e_max_sq(gamma) + c) / model.e_max(gamma)


def policy_cost(model: DelayModel, gamma: float, c: float) -> float:
    """Expected long-run cost of the fixed-threshold-gamma policy.

    At gamma = 0 this is the zero-wait cost
    ``(0.5*E[D^2] + C)/E[D] + E[D]``.
    """
    return t_map(model, gamma, c) + model.mean()


def solve_fixed_point(
    model: DelayModel,
    bounds: MomentBounds,
    c: float,
    cfg: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Iterate T from an interior starting point until the step size is <= delta.

    The starting point defaults to the interval midpoint (deterministic); a
    user-supplied gamma0 is clamped into the interval with a warning. When
    the model's true moments violate ``bounds`` the solve still runs, but the
    result is flagged so downstream consumers can see the mismatch.
    """
    warnings: list[str] = []
    report = validate_bounds(model, bounds)
    if not report.ok:
        warnings.append("moment bounds violated: " + "; ".join(report.violations))

    g_lb, g_ub = gamma_bounds(bounds, c)
    if cfg.gamma0 is None:
        gamma = 0.5 * (g_lb + g_ub)
    else:
        gamma = cfg.gamma0
        if not (g_lb <= gamma <= g_ub):
            clamped = min(max(gamma, g_lb), g_ub)
            warnings.append(f"gamma0 {gamma:.6g} outside [{g_lb:.6g}, {g_ub:.6g}]; clamped to {clamped:.6g}")
            gamma = clamped

    residual = math.inf
    for iteration in range(1, cfg.max_iter + 1):
        nxt = t_map(model, gamma, c)
        residual = abs(nxt - gamma)
        gamma = nxt
        if residual <= cfg.delta:
            return SolverResult(
                gamma_star=gamma,
                iterations=iteration,
                residual=residual,
                h_star=gamma + model.mean(),
                gamma_lb=g_lb,
                gamma_ub=g_ub,
                warnings=tuple(warnings),
            )
    raise SolverNonConvergence(
        f"no fixed point within {cfg.max_iter} iterations (last residual {residual:.3g})",
        last_gamma=gamma,
        residual=residual,
        iterations=cfg.max_iter,
    )

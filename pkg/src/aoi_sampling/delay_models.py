"""Transmission-delay distributions and their (censored) moments.

Every family exposes exact draws plus the quantities the solver and the
simulator need: mean, second moment, and the censored moments
E[max{D, g}] / E[max{D, g}^2] for a waiting threshold g. Closed forms are
used where they exist; truncated families fall back to adaptive quadrature.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Any, Callable, ClassVar, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

QUAD_REL_TOL = 1e-10
_QUAD_LIMIT = 200


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def derive_seed(base_seed: int, *stream: int) -> int:
    """Deterministically derive an independent 64-bit seed from a base seed.

    Used to give each repetition (and any other parallel stream) its own
    statistically independent generator: ``derive_seed(base, rep_index)``.
    """
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(stream))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class MomentBounds:
    """A-priori bounds on the delay's mean and second moment.

    These are user-supplied primitives: the online learner needs them even
    when the distribution itself is unknown. ``b`` is an optional hard cap
    on the delay, required only by the regret-bound diagnostics.
    """

    d_lb: float
    d_ub: float
    m_lb: float
    m_ub: float
    b: float | None = None

    def __post_init__(self) -> None:
        if not (0 < self.d_lb <= self.d_ub < math.inf):
            raise ValueError(f"need 0 < d_lb <= d_ub < inf, got [{self.d_lb}, {self.d_ub}]")
        if not (0 < self.m_lb <= self.m_ub < math.inf):
            raise ValueError(f"need 0 < m_lb <= m_ub < inf, got [{self.m_lb}, {self.m_ub}]")
        if self.d_lb**2 > self.m_ub:
            raise ValueError(f"d_lb^2 = {self.d_lb**2} exceeds m_ub = {self.m_ub}")
        if self.b is not None and self.d_ub > self.b:
            raise ValueError(f"d_ub = {self.d_ub} exceeds delay cap b = {self.b}")

    def to_dict(self) -> dict[str, float]:
        out = {"d_lb": self.d_lb, "d_ub": self.d_ub, "m_lb": self.m_lb, "m_ub": self.m_ub}
        if self.b is not None:
            out["b"] = self.b
        return out

    @classmethod
    def from_dict(cls, spec: dict[str, Any]) -> "MomentBounds":
        return cls(
            d_lb=float(spec["d_lb"]),
            d_ub=float(spec["d_ub"]),
            m_lb=float(spec["m_lb"]),
            m_ub=float(spec["m_ub"]),
            b=float(spec["b"]) if spec.get("b") is not None else None,
        )


@dataclass(frozen=True)
class BoundsReport:
    """Result of checking a model against its claimed moment bounds."""

    ok: bool
    violations: tuple[str, ...]
    advisory: bool = False


class DelayModel(abc.ABC):
    """One parametric delay distribution with all mass on (0, inf)."""

    kind: ClassVar[str]

    _registry: ClassVar[dict[str, type["DelayModel"]]] = {}

    def __init_subclass__(cls, **kwargs: Any) -> None:
        super().__init_subclass__(**kwargs)
        if hasattr(cls, "kind"):
            DelayModel._registry[cls.kind] = cls

    @property
    def cap(self) -> float | None:
        """Hard upper bound on the delay, or None if unbounded."""
        return None

    @abc.abstractmethod
    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. delays, advancing ``rng``."""

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.sample_n(rng, 1)[0])

    @abc.abstractmethod
    def mean(self) -> float: ...

    @abc.abstractmethod
    def second_moment(self) -> float: ...

    @abc.abstractmethod
    def e_max(self, gamma: float) -> float:
        """E[max{D, gamma}] for gamma >= 0."""

    @abc.abstractmethod
    def e_max_sq(self, gamma: float) -> float:
        """E[max{D, gamma}^2] for gamma >= 0."""

    @abc.abstractmethod
    def params(self) -> dict[str, Any]: ...

    def to_spec(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params()}

    @staticmethod
    def from_spec(spec: dict[str, Any]) -> "DelayModel":
        spec = dict(spec)
        try:
            kind = spec.pop("kind")
        except KeyError:
            raise ValueError("model spec is missing 'kind'") from None
        try:
            cls = DelayModel._registry[kind]
        except KeyError:
            known = ", ".join(sorted(DelayModel._registry))
            raise ValueError(f"unknown delay model kind {kind!r} (known: {known})") from None
        return cls(**spec)

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DelayModel):
            return NotImplemented
        return self.kind == other.kind and self.params() == other.params()


def _check_gamma(gamma: float) -> float:
    if gamma < 0:
        raise ValueError(f"threshold must be >= 0, got {gamma}")
    return float(gamma)


# -- generic quadrature over a density -------------------------------------
#
# Public so tests can cross-check the closed forms against an independent
# integration route on families that have both.


def _quad(f: Callable[[float], float], lo: float, hi: float) -> float:
    val, abserr, info, *rest = integrate.quad(
        f, lo, hi, epsabs=0.0, epsrel=QUAD_REL_TOL, limit=_QUAD_LIMIT, full_output=1
    )
    if rest:  # quadpack appended an error message
        raise QuadratureError(f"quadrature on [{lo}, {hi}] failed: {rest[0].strip()}")
    return float(val)


def quadrature_mean(model: "DelayModel") -> float:
    lo, hi = model.support()  # type: ignore[attr-defined]
    return _quad(lambda x: x * model.pdf(x), lo, hi)  # type: ignore[attr-defined]


def quadrature_second_moment(model: "DelayModel") -> float:
    lo, hi = model.support()  # type: ignore[attr-defined]
    return _quad(lambda x: x * x * model.pdf(x), lo, hi)  # type: ignore[attr-defined]


def quadrature_e_max(model: "DelayModel", gamma: float) -> float:
    """E[max{D, gamma}] by adaptive quadrature, split at the kink."""
    gamma = _check_gamma(gamma)
    lo, hi = model.support()  # type: ignore[attr-defined]
    pdf = model.pdf  # type: ignore[attr-defined]
    if gamma <= lo:
        return quadrature_mean(model)
    if gamma >= hi:
        return gamma
    below = gamma * _quad(pdf, lo, gamma)
    above = _quad(lambda x: x * pdf(x), gamma, hi)
    return below + above


def quadrature_e_max_sq(model: "DelayModel", gamma: float) -> float:
    """E[max{D, gamma}^2] by adaptive quadrature, split at the kink."""
    gamma = _check_gamma(gamma)
    lo, hi = model.support()  # type: ignore[attr-defined]
    pdf = model.pdf  # type: ignore[attr-defined]
    if gamma <= lo:
        return quadrature_second_moment(model)
    if gamma >= hi:
        return gamma * gamma
    below = gamma * gamma * _quad(pdf, lo, gamma)
    above = _quad(lambda x: x * x * pdf(x), gamma, hi)
    return below + above


# -- families ---------------------------------------------------------------


class Constant(DelayModel):
    """Degenerate delay: every transmission takes exactly ``d``."""

    kind = "constant"

    def __init__(self, d: float):
        if d <= 0:
            raise ValueError(f"constant delay must be positive, got {d}")
        self.d = float(d)

    @property
    def cap(self) -> float:
        return self.d

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.d)

    def mean(self) -> float:
        return self.d

    def second_moment(self) -> float:
        return self.d * self.d

    def e_max(self, gamma: float) -> float:
        return max(self.d, _check_gamma(gamma))

    def e_max_sq(self, gamma: float) -> float:
        return max(self.d, _check_gamma(gamma)) ** 2

    def params(self) -> dict[str, Any]:
        return {"d": self.d}


class Uniform(DelayModel):
    """Uniform delay on [a, b] with 0 <= a < b."""

    kind = "uniform"

    def __init__(self, a: float, b: float):
        if not (0 <= a < b):
            raise ValueError(f"need 0 <= a < b, got a={a}, b={b}")
        self.a = float(a)
        self.b = float(b)

    @property
    def cap(self) -> float:
        return self.b

    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    def pdf(self, x: float) -> float:
        return 1.0 / (self.b - self.a) if self.a <= x <= self.b else 0.0

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.a, self.b, n)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def second_moment(self) -> float:
        a, b = self.a, self.b
        return (a * a + a * b + b * b) / 3.0

    def e_max(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        a, b = self.a, self.b
        if g <= a:
            return self.mean()
        if g >= b:
            return g
        return (g * (g - a) + 0.5 * (b * b - g * g)) / (b - a)

    def e_max_sq(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        a, b = self.a, self.b
        if g <= a:
            return self.second_moment()
        if g >= b:
            return g * g
        return (g * g * (g - a) + (b**3 - g**3) / 3.0) / (b - a)

    def params(self) -> dict[str, Any]:
        return {"a": self.a, "b": self.b}


class Exponential(DelayModel):
    """Exponential delay with the given rate."""

    kind = "exponential"

    def __init__(self, rate: float):
        if rate <= 0:
            raise ValueError(f"rate must be positive, got {rate}")
        self.rate = float(rate)

    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def pdf(self, x: float) -> float:
        return self.rate * math.exp(-self.rate * x) if x >= 0 else 0.0

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.exponential(1.0 / self.rate, n)

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        return 2.0 / (self.rate * self.rate)

    def e_max(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        return g + math.exp(-self.rate * g) / self.rate

    def e_max_sq(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        lam = self.rate
        return g * g + math.exp(-lam * g) * (2 * g / lam + 2 / (lam * lam))

    def params(self) -> dict[str, Any]:
        return {"rate": self.rate}


def _lognorm_pdf(x: float, mu: float, sigma: float) -> float:
    if x <= 0:
        return 0.0
    z = (math.log(x) - mu) / sigma
    return math.exp(-0.5 * z * z) / (x * sigma * math.sqrt(2 * math.pi))


class LogNormal(DelayModel):
    """Log-normal delay: ln D ~ Normal(mu, sigma^2)."""

    kind = "lognormal"

    def __init__(self, mu: float, sigma: float):
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.mu = float(mu)
        self.sigma = float(sigma)

    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def pdf(self, x: float) -> float:
        return _lognorm_pdf(x, self.mu, self.sigma)

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.lognormal(self.mu, self.sigma, n)

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def second_moment(self) -> float:
        return math.exp(2 * self.mu + 2 * self.sigma**2)

    # Censored moments have exact expressions through the normal CDF:
    # E[D; D > g] = exp(mu + s^2/2) * Phi((mu + s^2 - ln g)/s), and similarly
    # with 2s for the second moment.
    def e_max(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        if g == 0.0:
            return self.mean()
        z = (math.log(g) - self.mu) / self.sigma
        return g * ndtr(z) + self.mean() * ndtr(self.sigma - z)

    def e_max_sq(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        if g == 0.0:
            return self.second_moment()
        z = (math.log(g) - self.mu) / self.sigma
        return g * g * ndtr(z) + self.second_moment() * ndtr(2 * self.sigma - z)

    def params(self) -> dict[str, Any]:
        return {"mu": self.mu, "sigma": self.sigma}


class TruncatedLogNormal(DelayModel):
    """Log-normal delay conditioned on D <= cap.

    The regret-bound diagnostics require a hard delay cap; this family is the
    capped twin of the plain log-normal. Moments go through adaptive
    quadrature on (0, cap].
    """

    kind = "truncated_lognormal"

    def __init__(self, mu: float, sigma: float, cap: float):
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if cap <= 0:
            raise ValueError(f"cap must be positive, got {cap}")
        self.mu = float(mu)
        self.sigma = float(sigma)
        self._cap = float(cap)
        # mass of the parent distribution below the cap
        self._z = float(ndtr((math.log(self._cap) - self.mu) / self.sigma))
        if self._z <= 0.0:
            raise ValueError(f"cap {cap} leaves no probability mass")

    @property
    def cap(self) -> float:
        return self._cap

    def support(self) -> tuple[float, float]:
        return (0.0, self._cap)

    def pdf(self, x: float) -> float:
        if x > self._cap:
            return 0.0
        return _lognorm_pdf(x, self.mu, self.sigma) / self._z

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # inverse-CDF through the parent normal; never exceeds the cap
        u = np.maximum(rng.uniform(0.0, self._z, n), 1e-300)
        return np.exp(self.mu + self.sigma * ndtri(u))

    def mean(self) -> float:
        return quadrature_mean(self)

    def second_moment(self) -> float:
        return quadrature_second_moment(self)

    def e_max(self, gamma: float) -> float:
        return quadrature_e_max(self, gamma)

    def e_max_sq(self, gamma: float) -> float:
        return quadrature_e_max_sq(self, gamma)

    def params(self) -> dict[str, Any]:
        return {"mu": self.mu, "sigma": self.sigma, "cap": self._cap}


class Empirical(DelayModel):
    """Resampling model over a fixed set of observed delays.

    Moments are the plug-in sample moments; draws are uniform with
    replacement from the stored values.
    """

    kind = "empirical"

    def __init__(self, values: Sequence[float]):
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("empirical model needs a non-empty 1-d sequence of delays")
        if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
            raise ValueError("empirical delays must be positive and finite")
        self.values = arr

    @property
    def cap(self) -> float:
        return float(self.values.max())

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.choice(self.values, size=n, replace=True)

    def mean(self) -> float:
        return float(self.values.mean())

    def second_moment(self) -> float:
        return float(np.mean(self.values**2))

    def e_max(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        return float(np.mean(np.maximum(self.values, g)))

    def e_max_sq(self, gamma: float) -> float:
        g = _check_gamma(gamma)
        return float(np.mean(np.maximum(self.values, g) ** 2))

    def params(self) -> dict[str, Any]:
        return {"values": self.values.tolist()}


def validate_bounds(model: DelayModel, bounds: MomentBounds) -> BoundsReport:
    """Check a model's true moments against claimed a-priori bounds.

    Returns a report listing every violated inequality instead of raising;
    callers decide whether a violation is fatal. For empirical models the
    report is advisory (sample moments are themselves estimates).
    """
    violations: list[str] = []
    m = model.mean()
    m2 = model.second_moment()
    if m < bounds.d_lb:
        violations.append(f"mean {m:.6g} < d_lb {bounds.d_lb:.6g}")
    if m > bounds.d_ub:
        violations.append(f"mean {m:.6g} > d_ub {bounds.d_ub:.6g}")
    if m2 < bounds.m_lb:
        violations.append(f"second moment {m2:.6g} < m_lb {bounds.m_lb:.6g}")
    if m2 > bounds.m_ub:
        violations.append(f"second moment {m2:.6g} > m_ub {bounds.m_ub:.6g}")
    if bounds.b is not None:
        if model.cap is None:
            violations.append(f"model {model.kind} is unbounded but cap b={bounds.b:.6g} claimed")
        elif model.cap > bounds.b:
            violations.append(f"model cap {model.cap:.6g} > claimed cap b {bounds.b:.6g}")
    return BoundsReport(
        ok=not violations,
        violations=tuple(violations),
        advisory=model.kind == Empirical.kind,
    )

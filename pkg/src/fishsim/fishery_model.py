"""The delayed harvesting model and its proportional-coefficient special case.

The general model is

    N'(t) = [ a(t) / (1 + (N(theta(t)) / K(t))**gamma) - b(t) ] * N(t),

with ``N = phi`` on ``t < 0`` and ``N(0) = n0``.  The proportional model
uses ``a(t) = a*r(t)``, ``b(t) = b*r(t)`` and a constant carrying capacity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from fishsim.coefficients import (
    CoefficientSpec,
    Constant,
    DelaySpec,
    HistorySpec,
    common_period,
)
from fishsim.report import ConditionReport, Verdict

VALIDATION_POINTS = 4096


class DomainError(ValueError):
    """An argument lies outside the domain of a model formula."""


class NoEquilibriumError(DomainError):
    pass


def _as_spec(value) -> CoefficientSpec:
    if isinstance(value, CoefficientSpec):
        return value
    return Constant(float(value))


def _as_delay(value) -> DelaySpec:
    if isinstance(value, DelaySpec):
        return value
    if isinstance(value, CoefficientSpec):
        return DelaySpec(value)
    return DelaySpec.constant(float(value))


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    a: CoefficientSpec
    b: CoefficientSpec
    K: CoefficientSpec
    delay: DelaySpec
    common_period: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")
        object.__setattr__(self, "gamma", float(self.gamma))
        for name in ("a", "b", "K"):
            object.__setattr__(self, name, _as_spec(getattr(self, name)))
        object.__setattr__(self, "delay", _as_delay(self.delay))

    @classmethod
    def constant(cls, a: float, b: float, K: float, gamma: float, tau: float) -> "ModelParams":
        return cls(gamma, Constant(a), Constant(b), Constant(K), DelaySpec.constant(tau))

    def component_periods(self) -> list:
        return [self.a.period, self.b.period, self.K.period, self.delay.period]

    @property
    def period(self) -> Optional[float]:
        """Shared period T of all coefficients; ``None`` when all are constant.

        Raises ``ValueError`` for incommensurate periods, or when an explicit
        ``common_period`` is not a multiple of some component period.
        """
        lcm = common_period(self.component_periods())
        if self.common_period is None:
            return lcm
        T = float(self.common_period)
        for p in self.component_periods():
            if p is None:
                continue
            k = round(T / p)
            if k < 1 or abs(k * p - T) > 1e-9 * T:
                raise ValueError(f"common_period {T!r} is not a multiple of {p!r}")
        return T

    def is_constant(self) -> bool:
        return self.a.is_constant and self.b.is_constant and self.K.is_constant \
            and self.delay.is_constant

    def with_changes(self, **changes) -> "ModelParams":
        values = dict(gamma=self.gamma, a=self.a, b=self.b, K=self.K, delay=self.delay,
                      common_period=self.common_period)
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class ProportionalParams:
    a: float
    b: float
    gamma: float
    K: float
    r: CoefficientSpec = field(default_factory=lambda: Constant(1.0))
    delay: DelaySpec = field(default_factory=lambda: DelaySpec.constant(0.0))

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")
        if not self.K > 0:
            raise DomainError(f"K must be positive, got {self.K!r}")
        for name in ("a", "b", "gamma", "K"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "r", _as_spec(self.r))
        object.__setattr__(self, "delay", _as_delay(self.delay))

    @property
    def period(self) -> Optional[float]:
        return common_period([self.r.period, self.delay.period])

    def linear_coefficient(self) -> float:
        """``gamma*(a-b)*b/a``, the slope of the linearisation about N*."""
        if not self.a > self.b:
            raise NoEquilibriumError("no positive equilibrium: requires a > b")
        return self.gamma * (self.a - self.b) * self.b / self.a

    def to_model(self) -> ModelParams:
        return ModelParams(self.gamma, self.r.scaled(self.a), self.r.scaled(self.b),
                           Constant(self.K), self.delay)

    def with_changes(self, **changes) -> "ProportionalParams":
        values = dict(a=self.a, b=self.b, gamma=self.gamma, K=self.K, r=self.r,
                      delay=self.delay)
        values.update(changes)
        return ProportionalParams(**values)


Params = Union[ModelParams, ProportionalParams]


def as_proportional(params: Params) -> Optional[ProportionalParams]:
    """View constant-coefficient models as proportional ones with ``r == 1``."""
    if isinstance(params, ProportionalParams):
        return params
    if params.a.is_constant and params.b.is_constant and params.K.is_constant:
        return ProportionalParams(params.a(0.0), params.b(0.0), params.gamma, params.K(0.0),
                                  Constant(1.0), params.delay)
    return None


def as_model(params: Params) -> ModelParams:
    return params.to_model() if isinstance(params, ProportionalParams) else params


def hill_fecundity(a_val, n_delayed, k_val, gamma):
    """Per-capita fecundity ``a / (1 + (N/K)**gamma)``."""
    if np.any(np.asarray(k_val) <= 0):
        raise DomainError("carrying capacity must be positive")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    if np.any(np.asarray(n_delayed) < 0):
        raise DomainError("delayed biomass must be nonnegative")
    return a_val / (1.0 + (n_delayed / k_val) ** gamma)


def rhs_log(t, x, n_delayed, params: ModelParams):
    """Right-hand side for ``x = ln N``; independent of ``x`` itself."""
    return hill_fecundity(params.a(t), n_delayed, params.K(t), params.gamma) - params.b(t)


def rhs(t, n, n_delayed, params: ModelParams):
    return rhs_log(t, None, n_delayed, params) * n


def equilibrium(params: Params) -> float:
    """Positive equilibrium ``(a/b - 1)**(1/gamma) * K`` of the proportional model."""
    p = as_proportional(params)
    if p is None:
        raise DomainError("equilibrium requires constant a, b and K")
    if not p.a > p.b or not p.b > 0:
        raise NoEquilibriumError("no positive equilibrium: requires a > b > 0")
    return (p.a / p.b - 1.0) ** (1.0 / p.gamma) * p.K


def linearized_rhs(t, x_delayed, params: ProportionalParams):
    """Perturbation equation about the equilibrium: ``-(gamma(a-b)b/a) r(t) x(theta)``."""
    return -params.linear_coefficient() * params.r(t) * x_delayed


def max_lag(delay: DelaySpec, period: Optional[float]) -> float:
    if delay.is_constant:
        return float(delay.lag(0.0))
    grid = np.linspace(0.0, delay.period, VALIDATION_POINTS, endpoint=False)
    return float(np.max(delay.lag(grid)))


def validation_grid(params: ModelParams, points: int = VALIDATION_POINTS) -> np.ndarray:
    """Uniform samples over one common period, or ``[0, max_lag + 1)`` if constant."""
    T = params.period
    if T is None:
        T = max(max_lag(params.delay, None), 0.0) + 1.0
    return np.linspace(0.0, T, points, endpoint=False)


def validate(params: Params, history: HistorySpec,
             points: int = VALIDATION_POINTS) -> ConditionReport:
    """Check the standing hypotheses on coefficients, delay and initial data.

    Never raises; every finding is an entry of the returned report.
    """
    params = as_model(params)
    report = ConditionReport()
    try:
        T = params.period
        report.add("common period T", T if T is not None else 0.0, 0.0, ">=")
        if T is None:
            report.note("all coefficients constant; validation grid spans max lag + 1")
    except ValueError as exc:
        report.add("common period T", math.nan, 0.0, ">=")
        report.note(str(exc))
        return report

    grid = validation_grid(params, points)
    with np.errstate(all="ignore"):
        a = params.a(grid)
        b = params.b(grid)
        K = params.K(grid)
        lag = params.delay.lag(grid)

    def lo(v):
        return float(np.min(v)) if np.all(np.isfinite(v)) else math.nan

    def hi(v):
        return float(np.max(v)) if np.all(np.isfinite(v)) else math.nan

    report.add("gamma > 0", params.gamma, 0.0, ">", boundary=Verdict.FAILS)
    report.add("a(t) >= 0", lo(a), 0.0, ">=")
    report.add("b(t) >= b > 0", lo(b), 0.0, ">", boundary=Verdict.FAILS)
    report.add("K(t) >= k > 0", lo(K), 0.0, ">", boundary=Verdict.FAILS)
    report.add("K(t) <= K_high", hi(K), math.inf, "<")
    report.add("theta(t) <= t", lo(lag), 0.0, ">=")
    report.add("sup lag < inf", hi(lag), math.inf, "<")

    span = hi(lag)
    if not span > 0:
        span = 1.0
    hgrid = np.linspace(-span, 0.0, points, endpoint=False)
    with np.errstate(all="ignore"):
        phi = history.phi(hgrid)
    report.add("phi(t) >= 0", lo(phi), 0.0, ">=")
    report.add("phi bounded", hi(np.abs(phi)), math.inf, "<")
    report.add("N0 > 0", history.n0, 0.0, ">", boundary=Verdict.FAILS)
    return report

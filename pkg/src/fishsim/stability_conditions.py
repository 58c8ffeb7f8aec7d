"""Sufficient conditions for persistence, periodic solutions and stability.

Every checker returns a ``ConditionReport``.  Limits superior over time are
replaced by suprema over one common period (all inputs are periodic or
constant), approximated on a uniform grid; integrals over the delay window
``[theta(t), t]`` use composite Simpson quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fishsim.coefficients import CoefficientSpec, DelaySpec, common_period
from fishsim.fishery_model import Params, ProportionalParams, as_model, as_proportional
from fishsim.report import ConditionReport

SUP_POINTS = 2048
PANELS = 256
TOLERANCE = 1e-9

# entry names; stable identifiers for CSV output and the sweep table
A_GT_B = "a(t) > b(t)"
INT_A_MINUS_B = "sup int (a-b) ds < inf"
INT_B = "sup int b ds < inf"
C_INF_GT_1 = "inf (a/b-1)K^gamma > 1"
C_SUP_LT_1 = "sup (a/b-1)K^gamma < 1"
PERIODIC_EXISTS = "inf (a/b-1)K^gamma > 1 or sup < 1"
A_POSITIVE = "a(t) >= a0 > 0"
ATTRACTOR = "gamma * sup int a ds < 6"
CONST_A_GT_B = "a > b"
C_NOT_1 = "(a/b-1)K^gamma != 1"
R_POSITIVE = "r(t) >= r0 > 0"
EQUILIBRIUM_ATTRACTOR = "gamma * a * sup int r ds < 6"
LOCAL_STABILITY = "gamma(a-b)b/a * sup int r ds < 3/2"
THREE_HALVES = "sup int r ds < 3/2"


@dataclass(frozen=True)
class LaggedIntegrals:
    t: np.ndarray
    values: np.ndarray
    error: float

    @property
    def sup(self) -> float:
        return float(np.max(self.values))


def _simpson(f: CoefficientSpec, t: np.ndarray, lag: np.ndarray, n: int) -> np.ndarray:
    k = np.arange(n + 1)
    nodes = (t - lag)[:, None] + lag[:, None] * (k / n)[None, :]
    fx = f(nodes)
    total = fx[:, 0] + fx[:, -1] + 4.0 * fx[:, 1:-1:2].sum(axis=1) + 2.0 * fx[:, 2:-1:2].sum(axis=1)
    return lag * total / (3.0 * n)


def lagged_integrals(f: CoefficientSpec, delay: DelaySpec, period: Optional[float],
                     points: int = SUP_POINTS, panels: int = PANELS) -> LaggedIntegrals:
    """``int_{theta(t)}^t f(s) ds`` on a uniform grid over one period.

    ``panels`` is the (even) number of Simpson subintervals; the rule is
    repeated with twice as many, and ``16/15 * |S_2n - S_n|`` estimates the
    error of the returned ``S_n``.
    """
    if panels % 2:
        raise ValueError("Simpson panel count must be even")
    T = 1.0 if period is None else period
    t = np.linspace(0.0, T, points, endpoint=False)
    lag = np.broadcast_to(np.asarray(delay.lag(t), dtype=float), t.shape)
    if f.is_constant:
        # exact; Simpson would only add rounding
        return LaggedIntegrals(t, f(0.0) * lag, 0.0)
    coarse = _simpson(f, t, lag, panels)
    fine = _simpson(f, t, lag, 2 * panels)
    return LaggedIntegrals(t, coarse, 16.0 * float(np.max(np.abs(fine - coarse))) / 15.0)


def lagged_integral_sup(f: CoefficientSpec, delay: DelaySpec, period: Optional[float] = None,
                        points: int = SUP_POINTS, panels: int = PANELS) -> float:
    """Supremum over one period of ``int_{theta(t)}^t f(s) ds``."""
    if period is None:
        period = common_period([f.period, delay.period])
    return lagged_integrals(f, delay, period, points, panels).sup


def _grid(period: Optional[float], points: int = SUP_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0 if period is None else period, points, endpoint=False)


def _quadrature_note(report, label, integrals):
    report.note(f"{label}: Simpson error estimate {integrals.error:.3g}")


def check_persistence(params: Params) -> ConditionReport:
    """Positive bounds for solutions: ``a > b`` and finite window integrals."""
    model = as_model(params)
    T = model.period
    report = ConditionReport()
    diff = _grid(T)
    gap = float(np.min(model.a(diff) - model.b(diff)))
    report.add(A_GT_B, gap, 0.0, ">")
    if abs(gap) <= TOLERANCE:
        report.note("a(t) = b(t) within tolerance somewhere: strict premise a > b uncertain")
    a_minus_b = _Difference(model.a, model.b)
    i1 = lagged_integrals(a_minus_b, model.delay, T)
    i2 = lagged_integrals(model.b, model.delay, T)
    report.add(INT_A_MINUS_B, i1.sup, math.inf, "<")
    report.add(INT_B, i2.sup, math.inf, "<")
    _quadrature_note(report, "int (a-b)", i1)
    _quadrature_note(report, "int b", i2)
    return report


class _Difference(CoefficientSpec):
    """Pointwise ``a - b``; only used for quadrature."""

    def __init__(self, a, b):
        self.a, self.b = a, b
        self.period = common_period([a.period, b.period])

    def __call__(self, t):
        return self.a(t) - self.b(t)

    def scaled(self, factor):
        return _Difference(self.a.scaled(factor), self.b.scaled(factor))

    def encode(self):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


def periodic_coefficient(params: Params, points: int = SUP_POINTS) -> np.ndarray:
    """``(a(t)/b(t) - 1) * K(t)**gamma`` sampled over one period."""
    model = as_model(params)
    t = _grid(model.period, points)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (model.a(t) / model.b(t) - 1.0) * model.K(t) ** model.gamma


def check_periodic_existence(params: Params) -> ConditionReport:
    """At least one positive periodic solution: the coefficient above stays
    on one side of 1."""
    C = periodic_coefficient(params)
    report = ConditionReport()
    lo = float(np.min(C)) if np.all(np.isfinite(C)) else math.nan
    hi = float(np.max(C)) if np.all(np.isfinite(C)) else math.nan
    e1 = report.add(C_INF_GT_1, lo, 1.0, ">", required=False)
    e2 = report.add(C_SUP_LT_1, hi, 1.0, "<", required=False)
    # holds iff either margin is positive
    report.add(PERIODIC_EXISTS, max(e1.margin, e2.margin), 0.0, ">")
    return report


def check_three_halves(r: CoefficientSpec, delay: DelaySpec) -> ConditionReport:
    """Decay of every solution of ``x' + r(t) x(theta(t)) = 0``."""
    T = common_period([r.period, delay.period])
    report = ConditionReport()
    report.add(R_POSITIVE, float(np.min(r(_grid(T)))), 0.0, ">")
    integrals = lagged_integrals(r, delay, T)
    report.add(THREE_HALVES, integrals.sup, 1.5, "<")
    _quadrature_note(report, "int r", integrals)
    return report


def check_global_attractor(params: Params) -> ConditionReport:
    """Unique positive periodic solution attracting all positive solutions."""
    model = as_model(params)
    report = ConditionReport()
    report.extend(check_persistence(model))
    report.extend(check_periodic_existence(model))
    T = model.period
    report.add(A_POSITIVE, float(np.min(model.a(_grid(T)))), 0.0, ">")
    integrals = lagged_integrals(model.a, model.delay, T)
    report.add(ATTRACTOR, model.gamma * integrals.sup, 6.0, "<")
    _quadrature_note(report, "int a", integrals)
    return report


def check_equilibrium_attractor(params: ProportionalParams) -> ConditionReport:
    """The equilibrium of the proportional model attracts all positive solutions."""
    report = ConditionReport()
    report.add(CONST_A_GT_B, params.a, params.b, ">")
    C = (params.a / params.b - 1.0) * params.K ** params.gamma if params.b > 0 else math.nan
    report.add(C_NOT_1, C, 1.0, "!=")
    T = params.period
    report.add(R_POSITIVE, float(np.min(params.r(_grid(T)))), 0.0, ">")
    integrals = lagged_integrals(params.r, params.delay, T)
    report.add(EQUILIBRIUM_ATTRACTOR, params.gamma * params.a * integrals.sup, 6.0, "<")
    _quadrature_note(report, "int r", integrals)
    return report


def check_local_stability(params: ProportionalParams) -> ConditionReport:
    """Local asymptotic stability of the equilibrium via its linearisation."""
    report = ConditionReport()
    report.add(CONST_A_GT_B, params.a, params.b, ">")
    T = params.period
    report.add(R_POSITIVE, float(np.min(params.r(_grid(T)))), 0.0, ">")
    integrals = lagged_integrals(params.r, params.delay, T)
    coeff = params.gamma * (params.a - params.b) * params.b / params.a
    report.add(LOCAL_STABILITY, coeff * integrals.sup, 1.5, "<")
    _quadrature_note(report, "int r", integrals)
    return report


def check_all(params: Params) -> dict:
    """Every applicable check, keyed by group name (used by the CLI)."""
    reports = {
        "persistence": check_persistence(params),
        "periodic_existence": check_periodic_existence(params),
        "global_attractor": check_global_attractor(params),
    }
    prop = as_proportional(params)
    if prop is not None:
        reports["equilibrium_attractor"] = check_equilibrium_attractor(prop)
        reports["local_stability"] = check_local_stability(prop)
        if prop.a > prop.b:
            reports["linearized_decay"] = check_three_halves(
                prop.r.scaled(prop.linear_coefficient()), prop.delay)
    return reports

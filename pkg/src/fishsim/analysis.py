"""Numerical experiments: periodic orbits, attraction, local stability, sweeps."""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from fishsim.coefficients import Constant, DelaySpec, HistorySpec, Sinusoid
from fishsim.dde_engine import (
    IntegrationError,
    StepControl,
    Trajectory,
    integrate,
    integrate_linear,
)
from fishsim.fishery_model import (
    Params,
    ProportionalParams,
    as_model,
    as_proportional,
    equilibrium,
    validation_grid,
)
from fishsim.report import Verdict, fmt
from fishsim import stability_conditions as sc

DEFAULT_TOL = 1e-4
DEFAULT_HORIZON_PERIODS = 60
DEFAULT_TRANSIENT_PERIODS = 60
FIT_PERIODS = 5
NOISE_FLOOR = 1e-11
SAMPLES_PER_PERIOD = 400
BOUNDS_SAMPLES = 10_000


class PreconditionWarning(UserWarning):
    pass


class PreconditionError(ValueError):
    pass


def _require(report, what: str, proceed: bool) -> None:
    if report.holds:
        return
    msg = f"{what} not established (verdict: {report.verdict})"
    if not proceed:
        raise PreconditionError(msg + "; pass proceed=True to run anyway")
    warnings.warn(msg, PreconditionWarning, stacklevel=3)


def _period(params: Params) -> float:
    T = as_model(params).period
    return 1.0 if T is None else T


@dataclass(frozen=True)
class PeriodicOrbit:
    orbit: Trajectory
    residual: float
    transient_used: float
    period: float
    tol: float

    @property
    def converged(self) -> bool:
        return self.residual < self.tol

    def sample(self, n: int = SAMPLES_PER_PERIOD + 1):
        return self.orbit.sample(n)

    def extrema(self, n: int = 20_001) -> tuple:
        _, N = self.sample(n)
        return float(np.min(N)), float(np.max(N))

    def to_csv(self) -> str:
        return trajectory_csv(self.orbit.t, self.orbit.values)


def trajectory_csv(t, N, header=("t", "N")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows((fmt(float(a)), fmt(float(b))) for a, b in zip(t, N))
    return buf.getvalue()


def find_periodic_solution(params: Params, control: StepControl = StepControl(),
                           transient_periods: int = DEFAULT_TRANSIENT_PERIODS,
                           tol: float = 1e-6, *, initial: Optional[float] = None,
                           proceed: bool = False) -> PeriodicOrbit:
    """Integrate through a transient and return the following period.

    The history is the constant ``initial`` (default: geometric mean of the
    carrying capacity over one period).  ``residual`` is the largest change
    ``|N(t) - N(t - T)|`` over the returned period; a residual at or above
    ``tol`` is reported through ``converged`` rather than raised.
    """
    model = as_model(params)
    _require(sc.check_global_attractor(model), "global attractor conditions", proceed)
    T = _period(model)
    if initial is None:
        initial = float(np.exp(np.mean(np.log(model.K(validation_grid(model))))))
    start = transient_periods * T
    end = start + T
    traj = integrate(model, HistorySpec.constant(initial), end, control,
                     align=(start - T, start))
    orbit = traj.window(start, end)
    residual = float(np.max(np.abs(orbit.values - traj(orbit.t - T))))
    return PeriodicOrbit(orbit, residual, start, T, tol)


@dataclass(frozen=True)
class ConvergenceReport:
    sup_diff_last_period: float
    decay_rate_estimate: float
    converged: bool
    tol: float = DEFAULT_TOL
    pair: tuple = ()
    per_period: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def decay_rate_estimable(self) -> bool:
        return not math.isnan(self.decay_rate_estimate)


CONVERGENCE_COLUMNS = ("run_i", "run_j", "sup_diff_last_period", "decay_rate_estimate",
                       "converged")


def convergence_csv(reports: Sequence[ConvergenceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONVERGENCE_COLUMNS)
    for r in reports:
        i, j = r.pair if r.pair else ("", "")
        w.writerow((i, j, fmt(r.sup_diff_last_period), fmt(r.decay_rate_estimate),
                    fmt(bool(r.converged))))
    return buf.getvalue()


def _per_period_sup(t: np.ndarray, dev: np.ndarray, T: float, n_periods: int):
    k = np.clip(np.floor(t / T + 1e-9).astype(int), 0, n_periods - 1)
    sups = np.zeros(n_periods)
    np.maximum.at(sups, k, dev)
    return sups


def decay_rate(sups: np.ndarray, T: float, scale: float = 1.0) -> float:
    """Least-squares decay rate of ``ln sup`` over the last periods above noise.

    Returns NaN when fewer than five periods exceed the noise floor.
    """
    ends = T * np.arange(1, len(sups) + 1)
    keep = np.nonzero(sups > NOISE_FLOOR * max(scale, 1.0))[0]
    if keep.size < FIT_PERIODS:
        return math.nan
    sel = keep[-FIT_PERIODS:]
    slope = np.polyfit(ends[sel], np.log(sups[sel]), 1)[0]
    return float(-slope)


def _compare(t, a: Trajectory, b: Trajectory, T, n_periods, tol, pair) -> ConvergenceReport:
    dev = np.abs(a(t) - b(t))
    sups = _per_period_sup(t, dev, T, n_periods)
    scale = float(max(np.max(np.abs(a.values)), np.max(np.abs(b.values))))
    last = float(sups[-1])
    return ConvergenceReport(last, decay_rate(sups, T, scale), last < tol, tol, pair, sups)


def verify_attraction(params: Params, histories: Sequence[HistorySpec],
                      control: StepControl = StepControl(),
                      horizon_periods: int = DEFAULT_HORIZON_PERIODS,
                      tol: float = DEFAULT_TOL) -> list:
    """Integrate every history and compare each pair over the final period.

    Returns one ``ConvergenceReport`` per pair ``(i, j)``, ``i < j``.
    Raises ``IntegrationError`` naming the run that left the representable
    range.
    """
    if len(histories) < 2:
        raise ValueError("at least two histories are required")
    model = as_model(params)
    T = _period(model)
    t_end = horizon_periods * T
    align = [k * T for k in range(1, horizon_periods)]
    runs = []
    for i, h in enumerate(histories):
        try:
            runs.append(integrate(model, h, t_end, control, align=align))
        except IntegrationError as exc:
            raise IntegrationError(exc.time, f"run {i}: {exc}") from exc
    reports = []
    for i, j in combinations(range(len(runs)), 2):
        t = np.union1d(runs[i].t, runs[j].t)
        reports.append(_compare(t, runs[i], runs[j], T, horizon_periods, tol, (i, j)))
    return reports


def standard_histories(params: Params) -> list:
    """Constant histories at half the smallest and twice the largest capacity."""
    K = as_model(params).K(validation_grid(as_model(params)))
    lo, hi = 0.5 * float(np.min(K)), 2.0 * float(np.max(K))
    return [HistorySpec.constant(lo), HistorySpec.constant(hi)]


@dataclass(frozen=True)
class LocalStabilityReport:
    linear: ConvergenceReport
    nonlinear: ConvergenceReport
    final_abs_x: float
    final_rel_dev: float
    equilibrium: float


def verify_local_stability(params: ProportionalParams, x0: float,
                           control: StepControl = StepControl(), horizon: float = 80.0,
                           *, eps: float = 0.01, tol: float = DEFAULT_TOL,
                           proceed: bool = False) -> LocalStabilityReport:
    """Decay of the linearised perturbation and of a nearby nonlinear solution.

    The linear run starts from the constant history ``x0``; the nonlinear
    one from the constant history ``N*(1 + eps)``.
    """
    _require(sc.check_local_stability(params), "local stability condition", proceed)
    T = _period(params)
    n_periods = max(1, int(math.floor(horizon / T + 1e-9)))
    align = [k * T for k in range(1, n_periods)]

    coeff = params.r.scaled(params.linear_coefficient())
    lin = integrate_linear(coeff, params.delay, HistorySpec.constant(x0), horizon, control,
                           align=align)
    sups = _per_period_sup(lin.t, np.abs(lin.values), T, n_periods)
    lin_report = ConvergenceReport(float(sups[-1]), decay_rate(sups, T, abs(x0)),
                                   bool(sups[-1] < tol), tol, (), sups)

    n_star = equilibrium(params)
    n_start = n_star * (1.0 + eps)
    traj = integrate(params, HistorySpec.constant(n_start), horizon, control, align=align)
    dev = np.abs(traj.values - n_star)
    sups = _per_period_sup(traj.t, dev, T, n_periods)
    rel = sups / n_star
    non_report = ConvergenceReport(float(rel[-1]), decay_rate(sups, T, n_star),
                                   bool(rel[-1] < tol), tol, (), rel)
    return LocalStabilityReport(lin_report, non_report, abs(float(lin.values[-1])),
                                abs(float(traj.values[-1]) - n_star) / n_star, n_star)


def persistence_bounds(traj: Trajectory, discard: float = 0.0,
                       samples: int = BOUNDS_SAMPLES) -> tuple:
    """Smallest and largest ``N`` over ``[discard, end]`` from dense output."""
    if not discard < traj.end:
        raise ValueError("discard must be shorter than the trajectory")
    _, N = traj.sample(samples, max(discard, traj.start), traj.end)
    return float(np.min(N)), float(np.max(N))


# -- parameter sweeps ------------------------------------------------------

SWEEP_PARAMS = ("gamma", "lag", "amplitude")


@dataclass(frozen=True)
class SweepAxis:
    param: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if self.count < 1:
            raise ValueError("sweep axis needs at least one point")
        if self.param == "gamma" and not min(self.start, self.stop) > 0:
            raise ValueError("gamma range must be positive")
        if self.param in ("lag", "amplitude") and min(self.start, self.stop) < 0:
            raise ValueError(f"{self.param} range must be nonnegative")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


def _with_amplitude(spec, amplitude, period):
    if isinstance(spec, Constant):
        return Sinusoid(spec.value, amplitude, period)
    if isinstance(spec, Sinusoid):
        return Sinusoid(spec.mean, amplitude, spec.period, spec.phase)
    raise ValueError("amplitude sweeps need a constant or sinusoidal coefficient")


def apply_parameter(base: Params, param: str, value: float) -> Params:
    """Copy of ``base`` with one swept parameter replaced."""
    if param == "gamma":
        return base.with_changes(gamma=value)
    if param == "lag":
        return base.with_changes(delay=DelaySpec.constant(value))
    period = _period(base)
    if isinstance(base, ProportionalParams):
        return base.with_changes(r=_with_amplitude(base.r, value, period))
    return base.with_changes(a=_with_amplitude(base.a, value, period))


SWEEP_COLUMNS = (
    "i", "j", "param1", "value1", "param2", "value2",
    "attractor_quantity", "attractor_verdict", "global_attractor_verdict",
    "equilibrium_attractor_quantity", "equilibrium_attractor_verdict",
    "local_stability_quantity", "local_stability_verdict",
    "empirical", "sup_diff", "decay_rate", "error",
)

CONVERGED = "converged"
NOT_CONVERGED = "not-converged-at-horizon"
OVERFLOW = "overflow"
ERROR = "error"


def _sweep_cell(job) -> dict:
    base, (i, p1, v1), (j, p2, v2), control, horizon_periods, tol = job
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(i=i, j=j, param1=p1, value1=float(v1), param2=p2, value2=float(v2))
    try:
        params = apply_parameter(apply_parameter(base, p1, v1), p2, v2)
        glob = sc.check_global_attractor(params)
        entry = glob[sc.ATTRACTOR]
        row.update(attractor_quantity=entry.quantity, attractor_verdict=str(entry.verdict),
                   global_attractor_verdict=str(glob.verdict))
        prop = as_proportional(params)
        if prop is not None:
            e17 = sc.check_equilibrium_attractor(prop)[sc.EQUILIBRIUM_ATTRACTOR]
            e18 = sc.check_local_stability(prop)[sc.LOCAL_STABILITY]
            row.update(equilibrium_attractor_quantity=e17.quantity,
                       equilibrium_attractor_verdict=str(e17.verdict),
                       local_stability_quantity=e18.quantity,
                       local_stability_verdict=str(e18.verdict))
        try:
            (rep,) = verify_attraction(params, standard_histories(params), control,
                                       horizon_periods, tol)
        except IntegrationError as exc:
            row.update(empirical=OVERFLOW, error=str(exc))
        else:
            row.update(empirical=CONVERGED if rep.converged else NOT_CONVERGED,
                       sup_diff=rep.sup_diff_last_period, decay_rate=rep.decay_rate_estimate)
    except Exception as exc:  # recorded per cell; a sweep never aborts
        row.update(empirical=ERROR, error=f"{type(exc).__name__}: {exc}")
    return row


@dataclass
class SweepTable:
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            w.writerow(fmt(row[c]) for c in SWEEP_COLUMNS)
        return buf.getvalue()

    def __len__(self) -> int:
        return len(self.rows)

    def sufficiency_violations(self) -> list:
        """Cells where the global-attractor conditions hold but runs did not converge."""
        return [r for r in self.rows
                if r["global_attractor_verdict"] == str(Verdict.HOLDS)
                and r["empirical"] != CONVERGED]


def sweep(base: Params, axis1: SweepAxis, axis2: SweepAxis,
          control: StepControl = StepControl(),
          horizon_periods: int = DEFAULT_HORIZON_PERIODS, tol: float = DEFAULT_TOL,
          jobs: int = 1) -> SweepTable:
    """Evaluate conditions and empirical attraction on a 2-D parameter grid.

    Rows are ordered by grid index whatever the completion order.
    """
    cells = [
        (base, (i, axis1.param, v1), (j, axis2.param, v2), control, horizon_periods, tol)
        for i, v1 in enumerate(axis1.values)
        for j, v2 in enumerate(axis2.values)
    ]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    return SweepTable(rows)

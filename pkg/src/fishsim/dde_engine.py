"""Method-of-steps integration of scalar delay equations with dense output.

The nonlinear model is advanced in ``x = ln N`` so trajectories stay
positive; the linear comparison equation ``x' = -r(t) x(theta(t))`` is
advanced in raw coordinates.  Each step is classical RK4; delayed values
come from the initial history or from cubic Hermite interpolation of the
already computed mesh.  The mesh is aligned with the first few propagated
discontinuity points of the delay map.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from fishsim._backend import kernel as _default_kernel
from fishsim.coefficients import (
    CoefficientSpec,
    Constant,
    DelaySpec,
    HistorySpec,
    common_period,
)
from fishsim.fishery_model import (
    VALIDATION_POINTS,
    Params,
    as_model,
    validate,
)
from fishsim.report import Verdict

MODE_LOG = 0
MODE_LINEAR = 1

MIN_STEP = 1e-10
STEP_FLOOR = 1e-4
STEP_CAP = 0.05
STEPS_PER_SCALE = 40
BISECT_TOL = 1e-12

_DUMMY = Constant(0.0).encode()


class IntegrationError(ArithmeticError):
    """The state left the representable range (blow-up or extinction)."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(message or
                         f"blow-up/extinction beyond representable range at t={time!r}")


@dataclass(frozen=True)
class StepControl:
    step: Optional[float] = None
    vanishing_lag_tol: float = 1e-12
    vanishing_lag_max_iter: int = 8
    breakpoint_depth: int = 3

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if not self.vanishing_lag_tol > 0:
            raise ValueError("vanishing_lag_tol must be positive")
        if self.vanishing_lag_max_iter < 1:
            raise ValueError("vanishing_lag_max_iter must be at least 1")
        if self.breakpoint_depth < 0:
            raise ValueError("breakpoint_depth must be nonnegative")


def default_step(delay: DelaySpec, period: Optional[float]) -> float:
    """``min(min lag, T) / 40`` clipped to ``[1e-4, 0.05]``."""
    if delay.is_constant:
        lag_min = float(delay.lag(0.0))
    else:
        grid = np.linspace(0.0, delay.period, VALIDATION_POINTS, endpoint=False)
        lag_min = float(np.min(delay.lag(grid)))
    scales = [s for s in (lag_min, period) if s is not None and s > 0]
    if not scales:
        return STEP_CAP
    return min(max(min(scales) / STEPS_PER_SCALE, STEP_FLOOR), STEP_CAP)


def _next_breakpoint(delay: DelaySpec, xi: float, t_end: float, scan: float) -> Optional[float]:
    """Smallest ``t >= xi`` with ``theta(t) = xi``, or ``None`` before ``t_end``."""
    if delay.lag(xi) <= 0:
        return xi
    chunk = 256
    lo = xi
    while lo < t_end:
        ts = lo + scan * np.arange(1, chunk + 1)
        hits = np.nonzero(delay.theta(ts) >= xi)[0]
        if hits.size:
            hi = float(ts[hits[0]])
            lo = hi - scan
            while hi - lo > BISECT_TOL:
                mid = 0.5 * (lo + hi)
                if delay.theta(mid) >= xi:
                    hi = mid
                else:
                    lo = mid
            return hi if hi <= t_end else None
        lo = float(ts[-1])
    return None


def breakpoints(delay: DelaySpec, t_end: float, depth: int, scan: float) -> list:
    """Propagated discontinuity points ``0 = xi_0 < xi_1 < ...`` up to ``depth``."""
    points = [0.0]
    if delay.is_constant:
        tau = float(delay.lag(0.0))
        if tau > 0:
            points += [k * tau for k in range(1, depth + 1) if k * tau <= t_end]
        return points
    xi = 0.0
    for _ in range(depth):
        nxt = _next_breakpoint(delay, xi, t_end, scan)
        if nxt is None or nxt - xi <= BISECT_TOL:
            break
        points.append(nxt)
        xi = nxt
    return points


def _stops(t_end: float, extra: Iterable[float]) -> np.ndarray:
    pts = sorted(p for p in set(extra) | {0.0, t_end} if 0.0 <= p <= t_end)
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > BISECT_TOL * max(1.0, abs(p)):
            merged.append(p)
    merged[-1] = t_end
    return np.asarray(merged, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Mesh values plus per-step cubic Hermite interpolants.

    ``y`` is the integrated coordinate (``ln N`` for ``mode="log"``) and
    ``slopes`` its derivative at every mesh point; ``values`` is the state
    (``N`` or the perturbation ``x``).  Times before ``start`` are answered
    by ``history``.
    """

    t: np.ndarray
    y: np.ndarray
    slopes: np.ndarray
    mode: str
    history: Callable
    start: float = 0.0
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.exp(self.y) if self.mode == "log" else self.y
        object.__setattr__(self, "values", values)

    @property
    def end(self) -> float:
        return float(self.t[-1])

    def __len__(self) -> int:
        return len(self.t)

    def __call__(self, t):
        return dense_eval(self, t)

    def window(self, t0: float, t1: float) -> "Trajectory":
        """Sub-trajectory on mesh points within ``[t0, t1]``; earlier times use ``self``."""
        i0 = int(np.searchsorted(self.t, t0, side="left"))
        i1 = int(np.searchsorted(self.t, t1, side="right"))
        if i1 - i0 < 2:
            raise ValueError("window must contain at least two mesh points")
        return Trajectory(self.t[i0:i1], self.y[i0:i1], self.slopes[i0:i1], self.mode,
                          self, float(self.t[i0]))

    def sample(self, n: int, t0: Optional[float] = None, t1: Optional[float] = None):
        ts = np.linspace(self.start if t0 is None else t0, self.end if t1 is None else t1, n)
        return ts, dense_eval(self, ts)


def dense_eval(traj: Trajectory, t):
    """Evaluate the trajectory at ``t`` (scalar or array).

    Mesh points return the stored value exactly; ``t < start`` is served by
    the history.  Raises ``ValueError`` beyond the trajectory end.
    """
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(ts > traj.t[-1]) or np.any(np.isnan(ts)):
        raise ValueError(f"evaluation time beyond trajectory end {traj.end!r}")
    out = np.empty_like(ts)
    past = ts < traj.start
    if np.any(past):
        out[past] = traj.history(ts[past])
    inside = ~past
    if np.any(inside):
        s = ts[inside]
        mesh = traj.t
        idx = np.searchsorted(mesh, s, side="right") - 1
        exact = mesh[idx] == s
        seg = np.minimum(idx, len(mesh) - 2)
        t0, t1 = mesh[seg], mesh[seg + 1]
        y0, y1 = traj.y[seg], traj.y[seg + 1]
        h = t1 - t0
        u = (s - t0) / h
        dp0 = traj.slopes[seg] * h
        dp1 = traj.slopes[seg + 1] * h
        y = y0 + u * (dp0 + u * (-2.0 * dp0 - dp1 - 3.0 * y0 + 3.0 * y1
                                 + u * (dp0 + dp1 + 2.0 * y0 - 2.0 * y1)))
        y = np.where(exact, traj.y[idx], y)
        out[inside] = np.exp(y) if traj.mode == "log" else y
    return float(out[0]) if scalar else out


def _run(mode, gamma, c1, c2, c3, delay, history, y0, t_end, control, period, align,
         kernel) -> tuple:
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    h = control.step if control.step is not None else default_step(delay, period)
    extra = list(breakpoints(delay, t_end, control.breakpoint_depth, h)) + list(align)
    stops = _stops(float(t_end), extra)
    kernel = kernel or _default_kernel
    t, y, f, status, t_fail = kernel.integrate(
        mode, float(gamma), c1, c2, c3, delay.lag.encode(), history.phi.encode(),
        float(y0), stops, float(h), float(control.vanishing_lag_tol),
        int(control.vanishing_lag_max_iter), MIN_STEP,
    )
    if status != 0:
        raise IntegrationError(t_fail)
    return t, y, f


def integrate(params: Params, history: HistorySpec, t_end: float,
              control: StepControl = StepControl(), *, align: Sequence[float] = (),
              check: bool = True, kernel=None) -> Trajectory:
    """Integrate the nonlinear model on ``[0, t_end]`` in log coordinates.

    ``align`` adds mesh points (for example period boundaries).  With
    ``check`` the hypotheses are validated first and a ``ValueError`` lists
    the failing ones.  Raises ``IntegrationError`` when ``|ln N|`` exceeds
    700.
    """
    model = as_model(params)
    if check:
        report = validate(model, history)
        bad = [e.name for e in report.entries if e.verdict is not Verdict.HOLDS]
        if bad:
            raise ValueError("invalid model or history: " + ", ".join(bad))
    t, y, f = _run(MODE_LOG, model.gamma, model.a.encode(), model.b.encode(),
                   model.K.encode(), model.delay, history, math.log(history.n0), t_end,
                   control, model.period, align, kernel)
    return Trajectory(t, y, f, "log", history)


def integrate_linear(coeff: CoefficientSpec, delay: DelaySpec, history: HistorySpec,
                     t_end: float, control: StepControl = StepControl(), *,
                     align: Sequence[float] = (), kernel=None) -> Trajectory:
    """Integrate ``x'(t) = -coeff(t) * x(theta(t))``; ``history.n0`` is ``x(0)``."""
    period = common_period([coeff.period, delay.period])
    t, y, f = _run(MODE_LINEAR, 1.0, coeff.encode(), _DUMMY, _DUMMY, delay, history,
                   history.n0, t_end, control, period, align, kernel)
    return Trajectory(t, y, f, "linear", history)

"""Time-dependent coefficient functions, delays and initial histories.

Every coefficient is an immutable object that can be evaluated at scalar or
array times and encoded into a flat float64 array for the integration
kernels.  Encodings (first entry is the kind code):

=========  ==================================================================
kind 0     ``[0, value]``
kind 1     ``[1, mean, amplitude, period, phase]``
kind 2     ``[2, period, n_cos, n_sin, c_0 .. c_{n_cos-1}, s_1 .. s_{n_sin}]``
kind 3     ``[3, period, m, t_0 .. t_{m-1}, v_0 .. v_{m-1}]`` (periodic)
kind 4     ``[4, 0, m, t_0 .. t_{m-1}, v_0 .. v_{m-1}]`` (clamped ends)
=========  ==================================================================
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

KIND_CONSTANT = 0
KIND_SINUSOID = 1
KIND_FOURIER = 2
KIND_PIECEWISE = 3
KIND_TABLE = 4


def _phase(t, period):
    """Reduce ``t`` into ``[0, period)``; works on floats and arrays."""
    u = np.fmod(t, period)
    u = np.where(u < 0.0, u + period, u)
    return np.where(u >= period, 0.0, u)


class CoefficientSpec(ABC):
    """A scalar function of time, either constant or periodic.

    Subclasses expose ``period`` (``None`` when not periodic).
    """

    period: Optional[float]

    @abstractmethod
    def __call__(self, t):
        ...

    @property
    def is_constant(self) -> bool:
        return False

    @abstractmethod
    def scaled(self, factor: float) -> "CoefficientSpec":
        """Return the pointwise product ``factor * self``."""

    @abstractmethod
    def encode(self) -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...


@dataclass(frozen=True)
class Constant(CoefficientSpec):
    value: float

    def __call__(self, t):
        if np.ndim(t) == 0:
            return float(self.value)
        return np.full(np.shape(t), float(self.value))

    @property
    def period(self) -> Optional[float]:
        return None

    @property
    def is_constant(self) -> bool:
        return True

    def scaled(self, factor):
        return Constant(factor * self.value)

    def encode(self):
        return np.array([KIND_CONSTANT, self.value], dtype=np.float64)

    def to_dict(self):
        return {"kind": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class Sinusoid(CoefficientSpec):
    """``mean + amplitude * sin(2*pi*t/period + phase)``."""

    mean: float
    amplitude: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("sinusoid period must be positive")

    def __call__(self, t):
        u = _phase(np.asarray(t, dtype=float), self.period)
        out = self.mean + self.amplitude * np.sin(TWO_PI * u / self.period + self.phase)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, factor):
        return Sinusoid(factor * self.mean, factor * self.amplitude, self.period, self.phase)

    def encode(self):
        return np.array(
            [KIND_SINUSOID, self.mean, self.amplitude, self.period, self.phase],
            dtype=np.float64,
        )

    def to_dict(self):
        return {
            "kind": "sinusoid",
            "mean": float(self.mean),
            "amplitude": float(self.amplitude),
            "period": float(self.period),
            "phase": float(self.phase),
        }


@dataclass(frozen=True)
class Fourier(CoefficientSpec):
    """Truncated Fourier series.

    ``cos[k]`` multiplies ``cos(2*pi*k*t/period)`` for ``k = 0, 1, ...`` (so
    ``cos[0]`` is the constant term) and ``sin[k-1]`` multiplies
    ``sin(2*pi*k*t/period)`` for ``k = 1, 2, ...``.
    """

    period: float
    cos: tuple = (0.0,)
    sin: tuple = ()

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("fourier period must be positive")
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin))

    def __call__(self, t):
        u = _phase(np.asarray(t, dtype=float), self.period)
        w = TWO_PI * u / self.period
        out = np.zeros_like(w)
        for k, c in enumerate(self.cos):
            out = out + c * np.cos(k * w)
        for k, s in enumerate(self.sin, start=1):
            out = out + s * np.sin(k * w)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, factor):
        return Fourier(
            self.period,
            tuple(factor * c for c in self.cos),
            tuple(factor * s for s in self.sin),
        )

    def encode(self):
        head = [KIND_FOURIER, self.period, len(self.cos), len(self.sin)]
        return np.array(head + list(self.cos) + list(self.sin), dtype=np.float64)

    def to_dict(self):
        return {
            "kind": "fourier",
            "period": float(self.period),
            "cos": list(self.cos),
            "sin": list(self.sin),
        }


def _check_knots(times, values):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size == 0:
        raise ValueError("times and values must be equal-length non-empty sequences")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise ValueError("sample table must be finite")
    return tuple(t.tolist()), tuple(v.tolist())


@dataclass(frozen=True)
class PiecewiseLinear(CoefficientSpec):
    """Periodic linear interpolation through samples taken over one period.

    The sample times must lie in ``[0, period)``; the last sample is joined
    to the first one shifted by a period.
    """

    period: float
    times: tuple
    values: tuple

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("piecewise period must be positive")
        t, v = _check_knots(self.times, self.values)
        if t[0] < 0 or t[-1] >= self.period:
            raise ValueError("sample times must lie in [0, period)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        u = _phase(np.asarray(t, dtype=float), self.period)
        p = self.period
        xs = np.concatenate(([self.times[-1] - p], self.times, [self.times[0] + p]))
        ys = np.concatenate(([self.values[-1]], self.values, [self.values[0]]))
        out = np.interp(u, xs, ys)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, factor):
        return PiecewiseLinear(self.period, self.times, tuple(factor * v for v in self.values))

    def encode(self):
        head = [KIND_PIECEWISE, self.period, len(self.times)]
        return np.array(head + list(self.times) + list(self.values), dtype=np.float64)

    def to_dict(self):
        return {
            "kind": "piecewise",
            "period": float(self.period),
            "times": list(self.times),
            "values": list(self.values),
        }


@dataclass(frozen=True)
class Table(CoefficientSpec):
    """Non-periodic linear interpolation, held constant beyond the ends.

    Meant for initial histories given as sampled data on ``t < 0``.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        t, v = _check_knots(self.times, self.values)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def period(self) -> Optional[float]:
        return None

    def __call__(self, t):
        out = np.interp(np.asarray(t, dtype=float), self.times, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def scaled(self, factor):
        return Table(self.times, tuple(factor * v for v in self.values))

    def encode(self):
        head = [KIND_TABLE, 0.0, len(self.times)]
        return np.array(head + list(self.times) + list(self.values), dtype=np.float64)

    def to_dict(self):
        return {"kind": "table", "times": list(self.times), "values": list(self.values)}


_KINDS = {
    "constant": (Constant, {"value"}, set()),
    "sinusoid": (Sinusoid, {"mean", "amplitude", "period"}, {"phase"}),
    "fourier": (Fourier, {"period"}, {"cos", "sin"}),
    "piecewise": (PiecewiseLinear, {"period", "times", "values"}, set()),
    "table": (Table, {"times", "values"}, set()),
}


def coefficient_from_dict(data) -> CoefficientSpec:
    """Build a coefficient from ``{"kind": ..., **params}`` or a bare number.

    Raises ``KeyError`` naming the offending key for missing or unknown
    parameters and ``ValueError`` for invalid values.
    """
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        return Constant(float(data))
    if not isinstance(data, dict):
        raise ValueError(f"expected a number or a table, got {type(data).__name__}")
    kind = data.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    cls, required, optional = _KINDS[kind]
    keys = set(data) - {"kind"}
    for key in sorted(required - keys):
        raise KeyError(key)
    for key in sorted(keys - required - optional):
        raise KeyError(key)
    params = {}
    for key in keys:
        value = data[key]
        if isinstance(value, list):
            params[key] = tuple(float(x) for x in value)
        else:
            params[key] = float(value)
    return cls(**params)


@dataclass(frozen=True)
class DelaySpec:
    """Deviating argument ``theta(t) = t - lag(t)``."""

    lag: CoefficientSpec

    @classmethod
    def constant(cls, tau: float) -> "DelaySpec":
        return cls(Constant(float(tau)))

    @classmethod
    def varying(cls, lag: CoefficientSpec) -> "DelaySpec":
        return cls(lag)

    @property
    def is_constant(self) -> bool:
        return self.lag.is_constant

    @property
    def period(self) -> Optional[float]:
        return self.lag.period

    def theta(self, t):
        return t - self.lag(t)


@dataclass(frozen=True)
class HistorySpec:
    """Initial function ``phi`` on ``t < 0`` (raw biomass) and value ``n0`` at 0."""

    phi: CoefficientSpec
    n0: float

    @classmethod
    def constant(cls, value: float, n0: Optional[float] = None) -> "HistorySpec":
        return cls(Constant(float(value)), float(value if n0 is None else n0))

    def __call__(self, t):
        return self.phi(t)


def common_period(periods: Iterable[Optional[float]], rtol: float = 1e-9,
                  max_denominator: int = 10_000) -> Optional[float]:
    """Least common multiple of the given periods, ignoring ``None``.

    Raises ``ValueError`` when two periods are not rational multiples of each
    other within ``rtol``.
    """
    result = None
    for p in periods:
        if p is None:
            continue
        if result is None:
            result = float(p)
            continue
        ratio = Fraction(p / result).limit_denominator(max_denominator)
        if abs(float(ratio) * result - p) > rtol * max(p, result):
            raise ValueError(f"periods {result!r} and {p!r} are incommensurate")
        # p / result = m / n  ->  lcm = result * m
        result = result * ratio.numerator
    return result


def grid_extrema(spec: CoefficientSpec, grid: Sequence[float]) -> tuple[float, float]:
    values = spec(np.asarray(grid, dtype=float))
    return float(np.min(values)), float(np.max(values))

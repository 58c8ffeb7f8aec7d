"""Experiment configuration: a restricted TOML document.

Sections and keys (anything else is an error in strict mode)::

    [model]
    form = "general"            # or "proportional"
    gamma = 1.0
    a = 2.0                     # number or coefficient table
    b = 1.0
    K = 2.0
    r = 1.0                     # proportional form only
    lag = 0.5                   # number or coefficient table
    period = 1.0                # optional explicit common period

    [history]
    phi = 1.0                   # number or table (default: N*, else geometric mean of K)
    n0 = 1.0                    # default: phi(0)

    [run]
    t_end = 50.0
    step = 0.01                 # default: derived from lag and period
    horizon_periods = 60
    transient_periods = 60
    tol = 1e-4                  # attraction / convergence tolerance
    periodic_tol = 1e-6
    vanishing_lag_tol = 1e-12
    vanishing_lag_max_iter = 8
    breakpoint_depth = 3
    plot_points = 1000          # 0 disables the downsampled plot CSV

    [converge]
    histories = [{phi = 1.0, n0 = 1.0}, {phi = 4.0}]   # default: standard pair

    [sweep]
    axis1 = {param = "gamma", start = 0.5, stop = 8.0, count = 8}
    axis2 = {param = "lag", start = 0.1, stop = 2.0, count = 8}

A coefficient table is ``{kind = "sinusoid", mean = 2, amplitude = 0.5,
period = 1, phase = 0}`` and likewise for ``constant``, ``fourier``,
``piecewise`` and ``table``.
"""
from __future__ import annotations

import math
import sys
import warnings
from dataclasses import dataclass, fields
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np
import tomli_w

from fishsim.analysis import SweepAxis
from fishsim.coefficients import (
    CoefficientSpec,
    Constant,
    DelaySpec,
    HistorySpec,
    coefficient_from_dict,
)
from fishsim.dde_engine import StepControl
from fishsim.fishery_model import (
    ModelParams,
    Params,
    ProportionalParams,
    as_model,
    equilibrium,
    validate,
    validation_grid,
)
from fishsim.report import Verdict


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is set for syntax errors, ``path`` for
    semantic ones."""

    def __init__(self, message: str, *, line: Optional[int] = None,
                 path: Optional[str] = None):
        self.line = line
        self.path = path
        if line is not None:
            message = f"line {line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ConfigWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RunSettings:
    t_end: float = 50.0
    step: Optional[float] = None
    horizon_periods: int = 60
    transient_periods: int = 60
    tol: float = 1e-4
    periodic_tol: float = 1e-6
    vanishing_lag_tol: float = 1e-12
    vanishing_lag_max_iter: int = 8
    breakpoint_depth: int = 3
    plot_points: int = 1000

    @property
    def control(self) -> StepControl:
        return StepControl(self.step, self.vanishing_lag_tol, self.vanishing_lag_max_iter,
                           self.breakpoint_depth)


@dataclass(frozen=True)
class ExperimentConfig:
    params: Params
    history: HistorySpec
    run: RunSettings = RunSettings()
    histories: tuple = ()
    axes: Optional[tuple] = None


_SECTIONS = {"model", "history", "run", "converge", "sweep"}
_GENERAL_KEYS = {"form", "gamma", "a", "b", "K", "lag", "period"}
_PROPORTIONAL_KEYS = {"form", "gamma", "a", "b", "K", "r", "lag"}
_INT_FIELDS = {"horizon_periods", "transient_periods", "vanishing_lag_max_iter",
               "breakpoint_depth", "plot_points"}


class _Reader:
    def __init__(self, strict: bool):
        self.strict = strict

    def unknown(self, table: dict, allowed, path: str) -> None:
        for key in sorted(set(table) - set(allowed)):
            where = f"{path}.{key}" if path else key
            if self.strict:
                raise ConfigError("unknown key", path=where)
            warnings.warn(f"{where}: unknown key ignored", ConfigWarning, stacklevel=4)

    @staticmethod
    def table(doc: dict, key: str, path: str) -> dict:
        value = doc.get(key, {})
        if not isinstance(value, dict):
            raise ConfigError("expected a table", path=path)
        return value

    @staticmethod
    def number(table: dict, key: str, path: str, default=None, *, integer=False):
        where = f"{path}.{key}"
        if key not in table:
            if default is None:
                raise ConfigError("missing field", path=where)
            return default
        value = table[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path=where)
        if integer:
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"expected an integer, got {value!r}", path=where)
            return int(value)
        if not math.isfinite(value):
            raise ConfigError(f"expected a finite number, got {value!r}", path=where)
        return float(value)

    @staticmethod
    def coefficient(table: dict, key: str, path: str, default=None) -> CoefficientSpec:
        where = f"{path}.{key}"
        if key not in table:
            if default is None:
                raise ConfigError("missing field", path=where)
            return default
        try:
            return coefficient_from_dict(table[key])
        except KeyError as exc:
            raise ConfigError("missing or unknown parameter", path=f"{where}.{exc.args[0]}")
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), path=where)


def _positive(value: float, path: str, *, allow_zero=False) -> None:
    ok = value >= 0 if allow_zero else value > 0
    if not ok:
        raise ConfigError(f"must be {'nonnegative' if allow_zero else 'positive'}, got {value!r}",
                          path=path)


def _model(doc: dict, rd: _Reader) -> Params:
    m = rd.table(doc, "model", "model")
    form = m.get("form", "general")
    if form not in ("general", "proportional"):
        raise ConfigError(f"unknown form {form!r}", path="model.form")
    gamma = rd.number(m, "gamma", "model")
    _positive(gamma, "model.gamma")
    lag = rd.coefficient(m, "lag", "model", Constant(0.0))
    if lag.is_constant:
        _positive(float(lag(0.0)), "model.lag", allow_zero=True)
    delay = DelaySpec(lag)
    if form == "proportional":
        rd.unknown(m, _PROPORTIONAL_KEYS, "model")
        a = rd.number(m, "a", "model")
        b = rd.number(m, "b", "model")
        K = rd.number(m, "K", "model")
        _positive(K, "model.K")
        r = rd.coefficient(m, "r", "model", Constant(1.0))
        return ProportionalParams(a, b, gamma, K, r, delay)
    rd.unknown(m, _GENERAL_KEYS, "model")
    period = rd.number(m, "period", "model", math.nan)
    period = None if math.isnan(period) else period
    if period is not None:
        _positive(period, "model.period")
    params = ModelParams(gamma, rd.coefficient(m, "a", "model"), rd.coefficient(m, "b", "model"),
                         rd.coefficient(m, "K", "model"), delay, period)
    try:
        params.period
    except ValueError as exc:
        raise ConfigError(str(exc), path="model.period")
    return params


def _history_from(table: dict, path: str, rd: _Reader, default_phi) -> HistorySpec:
    rd.unknown(table, {"phi", "n0"}, path)
    phi = rd.coefficient(table, "phi", path, default_phi)
    n0 = rd.number(table, "n0", path, float(phi(0.0)))
    return HistorySpec(phi, n0)


def _default_phi(params: Params) -> CoefficientSpec:
    """``N*`` when it exists, else the geometric mean of ``K`` over a period."""
    try:
        return Constant(equilibrium(params))
    except ValueError:
        model = as_model(params)
        K = model.K(validation_grid(model))
        return Constant(float(np.exp(np.mean(np.log(K)))))


# validity entries -> config field they come from
_ENTRY_PATHS = {
    "common period T": "model.period",
    "gamma > 0": "model.gamma",
    "a(t) >= 0": "model.a",
    "b(t) >= b > 0": "model.b",
    "K(t) >= k > 0": "model.K",
    "K(t) <= K_high": "model.K",
    "theta(t) <= t": "model.lag",
    "sup lag < inf": "model.lag",
    "phi(t) >= 0": "phi",
    "phi bounded": "phi",
    "N0 > 0": "n0",
}


def _check_valid(params: Params, history: HistorySpec, path: str) -> None:
    for entry in validate(params, history).entries:
        if entry.verdict is not Verdict.HOLDS:
            where = _ENTRY_PATHS[entry.name]
            if not where.startswith("model."):
                where = f"{path}.{where}"
            raise ConfigError(f"violates {entry.name!r} (value {entry.quantity!r})", path=where)


def _run(doc: dict, rd: _Reader) -> RunSettings:
    r = rd.table(doc, "run", "run")
    rd.unknown(r, {f.name for f in fields(RunSettings)}, "run")
    defaults = RunSettings()
    values = {}
    for f in fields(RunSettings):
        default = getattr(defaults, f.name)
        if f.name == "step":
            if "step" in r:
                values["step"] = rd.number(r, "step", "run")
                _positive(values["step"], "run.step")
            continue
        values[f.name] = rd.number(r, f.name, "run", default, integer=f.name in _INT_FIELDS)
    for name in ("t_end", "tol", "periodic_tol", "vanishing_lag_tol"):
        _positive(values[name], f"run.{name}")
    for name in ("horizon_periods", "transient_periods", "vanishing_lag_max_iter"):
        _positive(values[name], f"run.{name}")
    for name in ("breakpoint_depth", "plot_points"):
        _positive(values[name], f"run.{name}", allow_zero=True)
    return RunSettings(**values)


def _axis(table: dict, key: str, rd: _Reader) -> SweepAxis:
    path = f"sweep.{key}"
    spec = rd.table(table, key, path)
    if key not in table:
        raise ConfigError("missing field", path=path)
    rd.unknown(spec, {"param", "start", "stop", "count"}, path)
    if "param" not in spec:
        raise ConfigError("missing field", path=f"{path}.param")
    try:
        return SweepAxis(spec["param"], rd.number(spec, "start", path),
                         rd.number(spec, "stop", path),
                         rd.number(spec, "count", path, integer=True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), path=path)


def parse_config(text: str, strict: bool = True) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Syntax errors carry the line number; semantic errors name the field
    path (for example ``model.gamma``).  Without ``strict`` unknown keys
    only produce a ``ConfigWarning``.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(getattr(exc, "msg", str(exc)), line=getattr(exc, "lineno", None))
    rd = _Reader(strict)
    rd.unknown(doc, _SECTIONS, "")
    params = _model(doc, rd)
    h = rd.table(doc, "history", "history")
    default_phi = None if "phi" in h else _default_phi(params)
    history = _history_from(h, "history", rd, default_phi)
    _check_valid(params, history, "history")
    run = _run(doc, rd)

    conv = rd.table(doc, "converge", "converge")
    rd.unknown(conv, {"histories"}, "converge")
    histories = []
    raw = conv.get("histories", [])
    if not isinstance(raw, list):
        raise ConfigError("expected an array of tables", path="converge.histories")
    for k, item in enumerate(raw):
        path = f"converge.histories[{k}]"
        if not isinstance(item, dict):
            raise ConfigError("expected a table", path=path)
        if "phi" not in item:
            raise ConfigError("missing field", path=f"{path}.phi")
        histories.append(_history_from(item, path, rd, None))
        _check_valid(params, histories[-1], path)

    axes = None
    if "sweep" in doc:
        sw = rd.table(doc, "sweep", "sweep")
        rd.unknown(sw, {"axis1", "axis2"}, "sweep")
        axes = (_axis(sw, "axis1", rd), _axis(sw, "axis2", rd))
    return ExperimentConfig(params, history, run, tuple(histories), axes)


def _spec_value(spec: CoefficientSpec):
    return float(spec.value) if isinstance(spec, Constant) else spec.to_dict()


def _history_dict(h: HistorySpec) -> dict:
    return {"phi": _spec_value(h.phi), "n0": float(h.n0)}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Fully resolved document (defaults applied) for ``dump_config``."""
    p = cfg.params
    if isinstance(p, ProportionalParams):
        model = {"form": "proportional", "gamma": p.gamma, "a": p.a, "b": p.b, "K": p.K,
                 "r": _spec_value(p.r), "lag": _spec_value(p.delay.lag)}
    else:
        model = {"form": "general", "gamma": p.gamma, "a": _spec_value(p.a),
                 "b": _spec_value(p.b), "K": _spec_value(p.K), "lag": _spec_value(p.delay.lag)}
        if p.common_period is not None:
            model["period"] = p.common_period
    run = {f.name: getattr(cfg.run, f.name) for f in fields(RunSettings)}
    if run["step"] is None:
        del run["step"]
    doc = {"model": model, "history": _history_dict(cfg.history), "run": run}
    if cfg.histories:
        doc["converge"] = {"histories": [_history_dict(h) for h in cfg.histories]}
    if cfg.axes is not None:
        doc["sweep"] = {
            name: {"param": ax.param, "start": ax.start, "stop": ax.stop, "count": ax.count}
            for name, ax in zip(("axis1", "axis2"), cfg.axes)
        }
    return doc


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize so that ``parse_config(dump_config(cfg)) == cfg``."""
    return tomli_w.dumps(config_to_dict(cfg))

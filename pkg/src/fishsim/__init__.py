"""Delayed, time-varying fish-harvesting model: integration, sufficient
stability conditions and numerical experiments."""

from fishsim._backend import BACKEND
from fishsim.analysis import (
    ConvergenceReport,
    LocalStabilityReport,
    PeriodicOrbit,
    PreconditionError,
    PreconditionWarning,
    SweepAxis,
    SweepTable,
    find_periodic_solution,
    persistence_bounds,
    standard_histories,
    sweep,
    verify_attraction,
    verify_local_stability,
)
from fishsim.coefficients import (
    Constant,
    DelaySpec,
    Fourier,
    HistorySpec,
    PiecewiseLinear,
    Sinusoid,
    Table,
    coefficient_from_dict,
    common_period,
)
from fishsim.config import ConfigError, ExperimentConfig, dump_config, parse_config
from fishsim.dde_engine import (
    IntegrationError,
    StepControl,
    Trajectory,
    dense_eval,
    integrate,
    integrate_linear,
)
from fishsim.fishery_model import (
    DomainError,
    ModelParams,
    NoEquilibriumError,
    ProportionalParams,
    equilibrium,
    validate,
)
from fishsim.report import ConditionReport, Verdict
from fishsim.stability_conditions import (
    check_all,
    check_equilibrium_attractor,
    check_global_attractor,
    check_local_stability,
    check_periodic_existence,
    check_persistence,
    check_three_halves,
    lagged_integral_sup,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConditionReport",
    "ConfigError",
    "Constant",
    "ConvergenceReport",
    "DelaySpec",
    "DomainError",
    "ExperimentConfig",
    "Fourier",
    "HistorySpec",
    "IntegrationError",
    "LocalStabilityReport",
    "ModelParams",
    "NoEquilibriumError",
    "PeriodicOrbit",
    "PiecewiseLinear",
    "PreconditionError",
    "PreconditionWarning",
    "ProportionalParams",
    "Sinusoid",
    "StepControl",
    "SweepAxis",
    "SweepTable",
    "Table",
    "Trajectory",
    "Verdict",
    "check_all",
    "check_equilibrium_attractor",
    "check_global_attractor",
    "check_local_stability",
    "check_periodic_existence",
    "check_persistence",
    "check_three_halves",
    "coefficient_from_dict",
    "common_period",
    "dense_eval",
    "dump_config",
    "equilibrium",
    "find_periodic_solution",
    "integrate",
    "integrate_linear",
    "lagged_integral_sup",
    "parse_config",
    "persistence_bounds",
    "standard_histories",
    "sweep",
    "validate",
    "verify_attraction",
    "verify_local_stability",
]

"""Command-line front end.

    fishsim <simulate|check|periodic|converge|sweep> --config FILE --out DIR
            [--jobs N] [--strict]

Exit status is 0 on success, 1 on an input error and 2 when an integration
leaves the representable range.  Diagnostics go to stderr only; result files
are written after the computation finishes.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

from fishsim import analysis, stability_conditions
from fishsim.config import ConfigError, ExperimentConfig, dump_config, parse_config
from fishsim.dde_engine import IntegrationError, integrate
from fishsim.fishery_model import validate
from fishsim.report import CSV_COLUMNS

COMMANDS = ("simulate", "check", "periodic", "converge", "sweep")
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2
SIDECAR = "resolved_config.toml"


def _plot(traj, points: int) -> str:
    t, N = traj.sample(points)
    return analysis.trajectory_csv(t, N)


def _simulate(cfg: ExperimentConfig, strict: bool, jobs: int) -> dict:
    traj = integrate(cfg.params, cfg.history, cfg.run.t_end, cfg.run.control)
    files = {"trajectory.csv": analysis.trajectory_csv(traj.t, traj.values)}
    if cfg.run.plot_points:
        files["trajectory_plot.csv"] = _plot(traj, cfg.run.plot_points)
    return files


def _check(cfg: ExperimentConfig, strict: bool, jobs: int) -> dict:
    reports = {"validity": validate(cfg.params, cfg.history)}
    reports.update(stability_conditions.check_all(cfg.params))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("group",) + CSV_COLUMNS)
    text = []
    for group, report in reports.items():
        w.writerows((group,) + row for row in report.rows())
        text.append(f"[{group}]\n{report.to_text()}")
    return {"conditions.csv": buf.getvalue(), "conditions.txt": "\n".join(text)}


def _periodic(cfg: ExperimentConfig, strict: bool, jobs: int) -> dict:
    run = cfg.run
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", analysis.PreconditionWarning)
        orbit = analysis.find_periodic_solution(cfg.params, run.control, run.transient_periods,
                                                run.periodic_tol, proceed=not strict)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    lo, hi = orbit.extrema()
    report = (
        f"period {orbit.period!r}\n"
        f"transient {orbit.transient_used!r}\n"
        f"residual {orbit.residual!r}\n"
        f"tolerance {orbit.tol!r}\n"
        f"converged {str(orbit.converged).lower()}\n"
        f"min {lo!r}\n"
        f"max {hi!r}\n"
    )
    files = {"orbit.csv": orbit.to_csv(), "report.txt": report}
    if run.plot_points:
        files["orbit_plot.csv"] = _plot(orbit.orbit, run.plot_points)
    return files


def _converge(cfg: ExperimentConfig, strict: bool, jobs: int) -> dict:
    histories = list(cfg.histories) or analysis.standard_histories(cfg.params)
    reports = analysis.verify_attraction(cfg.params, histories, cfg.run.control,
                                         cfg.run.horizon_periods, cfg.run.tol)
    return {"convergence.csv": analysis.convergence_csv(reports)}


def _sweep(cfg: ExperimentConfig, strict: bool, jobs: int) -> dict:
    if cfg.axes is None:
        raise ConfigError("missing section", path="sweep")
    table = analysis.sweep(cfg.params, *cfg.axes, cfg.run.control,
                           cfg.run.horizon_periods, cfg.run.tol, jobs)
    return {"sweep.csv": table.to_csv()}


HANDLERS = {
    "simulate": _simulate,
    "check": _check,
    "periodic": _periodic,
    "converge": _converge,
    "sweep": _sweep,
}


def run_command(cmd: str, cfg: ExperimentConfig, out_dir, *, jobs: int = 1,
                strict: bool = False) -> int:
    """Run one command and write its files into ``out_dir``; returns the exit status."""
    if cmd not in HANDLERS:
        print(f"error: unknown command {cmd!r}", file=sys.stderr)
        return EXIT_INPUT
    try:
        files = HANDLERS[cmd](cfg, strict, jobs)
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / SIDECAR).write_text(dump_config(cfg), encoding="utf-8")
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fishsim",
                                     description="Delayed fish-harvesting model experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML experiment configuration")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="concurrent sweep cells")
    parser.add_argument("--strict", action="store_true",
                        help="reject unknown config keys and unestablished preconditions")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            cfg = parse_config(text, strict=args.strict)
        except ConfigError as exc:
            print(f"error: {args.config}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return run_command(args.command, cfg, args.out, jobs=args.jobs, strict=args.strict)


if __name__ == "__main__":
    sys.exit(main())

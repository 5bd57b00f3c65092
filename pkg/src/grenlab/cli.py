"""Command-line front end.

``grenlab run <config> --out results.csv`` runs an experiment described by a
``key = value`` configuration file and writes one CSV row per replication.
``grenlab report results.csv --regressor lognlogn --out report.csv`` fits
log-log rates per ``(model, statistic)`` group.

Exit status: 0 on success, 2 for invalid configuration or input files, 3 for
I/O failures.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass

from . import monotone
from .errors import FitError, InputError, ModelError
from .ratelab import (
    REGRESSORS,
    ExperimentPlan,
    ResultRow,
    default_model,
    fit_log_rate,
    run_experiment,
    summarize,
)

logger = logging.getLogger("grenlab")

RESULT_HEADER = ["model", "statistic", "n", "rep", "value"]
REPORT_HEADER = ["model", "statistic", "slope", "stderr", "r2", "n_min", "n_max", "reps"]

# key -> (parser, required)
CONFIG_KEYS = {
    "model.variant": (str, True),
    "model.driver": (str, False),
    "model.censoring_mass": (float, False),
    "experiment.statistic": (str, True),
    "experiment.n_grid": (lambda v: tuple(int(x) for x in v.replace(",", " ").split()), True),
    "experiment.reps": (int, True),
    "experiment.seed": (int, False),
    "experiment.x0": (float, False),
    "experiment.epsilon_scale": (float, False),
    "experiment.epsilon_power": (float, False),
    "experiment.c0": (float, False),
    "experiment.moment_order": (float, False),
    "experiment.kernel": (str, False),
    "experiment.bandwidth_alpha": (float, False),
    "experiment.bandwidth_scale": (float, False),
    "experiment.derivative_order": (int, False),
    "experiment.grid_size": (int, False),
    "output.path": (str, False),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    plan: ExperimentPlan
    output: str | None


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        if key in values:
            raise ConfigError(f"duplicate config key {key!r} (line {lineno})")
        try:
            values[key] = CONFIG_KEYS[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    missing = [k for k, (_, req) in CONFIG_KEYS.items() if req and k not in values]
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
    return values


def build_config(values: dict, seed: int | None = None) -> RunConfig:
    mass = values.get("model.censoring_mass", 0.5)
    if not 0 < mass < 1:
        raise ConfigError("model.censoring_mass must lie in (0, 1)")
    model = default_model(
        values["model.variant"],
        driver=values.get("model.driver", "bridge"),
        censoring_mass=mass,
    )
    kwargs = {
        "model": model,
        "n_grid": values["experiment.n_grid"],
        "reps": values["experiment.reps"],
        "statistic": values["experiment.statistic"],
        "bandwidth": monotone.BandwidthRule(
            values.get("experiment.bandwidth_alpha", 2.0),
            values.get("experiment.bandwidth_scale", 1.0),
        ),
    }
    for key in ("seed", "x0", "epsilon_scale", "epsilon_power", "c0", "moment_order",
                "kernel", "derivative_order", "grid_size"):
        if f"experiment.{key}" in values:
            kwargs[key] = values[f"experiment.{key}"]
    if seed is not None:
        kwargs["seed"] = seed
    plan = ExperimentPlan(**kwargs).validate()
    return RunConfig(plan, values.get("output.path"))


def _fmt(v: float) -> str:
    return format(v, ".17g")


def write_results(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow([r.model, r.statistic, r.n, r.rep, _fmt(r.value)])


def read_results(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_HEADER:
            raise InputError(f"unexpected header {header!r}")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(RESULT_HEADER):
                raise InputError(f"line {lineno}: expected {len(RESULT_HEADER)} fields")
            try:
                rows.append(ResultRow(rec[0], rec[1], int(rec[2]), int(rec[3]), float(rec[4])))
            except ValueError as exc:
                raise InputError(f"line {lineno}: {exc}") from exc
    return rows


def report_rows(rows, regressor):
    groups = {}
    for r in rows:
        groups.setdefault((r.model, r.statistic), []).append(r)
    out = []
    for (model, statistic), grp in groups.items():
        ns, _, reps = summarize(grp)
        try:
            fit = fit_log_rate(grp, regressor)
        except FitError as exc:
            logger.warning("%s/%s: no rate fitted: %s", model, statistic, exc)
            out.append([model, statistic, "", "", "", int(ns[0]), int(ns[-1]), reps])
            continue
        out.append([model, statistic, _fmt(fit.slope), _fmt(fit.stderr), _fmt(fit.r2),
                    fit.n_min, fit.n_max, fit.reps])
    return out


def cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        logger.error("cannot read config: %s", exc)
        return 3
    try:
        cfg = build_config(parse_config(text), args.seed)
    except (ConfigError, InputError, ModelError) as exc:
        logger.error("invalid configuration: %s", exc)
        return 2
    out = args.out or cfg.output
    if not out:
        logger.error("invalid configuration: no output path (use --out or output.path)")
        return 2
    rows, _ = run_experiment(cfg.plan, workers=args.threads)
    try:
        write_results(rows, out)
    except OSError as exc:
        logger.error("cannot write results: %s", exc)
        return 3
    return 0


def cmd_report(args) -> int:
    try:
        rows = read_results(args.results)
    except OSError as exc:
        logger.error("cannot read results: %s", exc)
        return 3
    except (InputError, csv.Error) as exc:
        logger.error("malformed results file: %s", exc)
        return 2
    if not rows:
        logger.error("malformed results file: no data rows")
        return 2
    table = report_rows(rows, args.regressor)
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_HEADER)
            w.writerows(table)
    except OSError as exc:
        logger.error("cannot write report: %s", exc)
        return 3
    return 0


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="grenlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write per-replication results")
    run.add_argument("config")
    run.add_argument("--out")
    run.add_argument("--seed", type=_u64)
    run.add_argument("--threads", type=int, default=1)
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="fit log-log rates to a results file")
    rep.add_argument("results")
    rep.add_argument("--regressor", choices=REGRESSORS, default="lognlogn")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # diagnostics go to the stderr of this invocation, whatever logging setup
    # the host process has
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(handler)
    try:
        return args.func(args)
    finally:
        logger.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())

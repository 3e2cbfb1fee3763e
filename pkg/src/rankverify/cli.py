"""Command-line interface: run the verification procedures on count data.

Exit codes: 0 success, 1 usage error, 2 malformed data, 3 internal error.
Reports are JSON on stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import SeedRequired, BradleyTerry, Observation, make_family
from .procedures import procedure1, procedure2, procedure2prime, procedure3, procedure3prime
from .simulate import SimConfig, coverage_sim, error_rate_sim, power_curve

SCHEMA_VERSION = "1.0"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

_NUMBER = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "rankverify report",
    "type": "object",
    "required": ["schema_version", "command", "family", "alpha", "seed", "outcome", "warnings"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"type": "array", "items": {"type": "string"}},
        "family": {
            "type": "object",
            "required": ["kind", "n"],
            "properties": {
                "kind": {"enum": ["multinomial", "binomial", "normal-variance", "bradley-terry"]},
                "n": {"type": "integer", "minimum": 2},
                "m": {"type": ["integer", "null"]},
            },
        },
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seed": {"type": ["integer", "null"]},
        "outcome": {
            "oneOf": [
                {"type": "object", "required": ["reject", "p_value", "level_used", "winner", "runner_up"],
                 "properties": {"reject": {"type": "boolean"}, "p_value": _NUMBER}},
                {"type": "object", "required": ["delta_lower", "interpretation", "method"],
                 "properties": {"delta_lower": _NUMBER, "method": {"enum": ["procedure2", "procedure2prime"]}}},
                {"type": "object", "required": ["j_hat", "steps", "method", "verified"],
                 "properties": {"j_hat": {"type": "integer", "minimum": 0},
                                "method": {"enum": ["procedure3", "procedure3prime"]}}},
                {"type": "object", "required": ["columns", "rows"],
                 "properties": {"columns": {"type": "array", "items": {"type": "string"}},
                                "rows": {"type": "array", "items": {"type": "array"}}}},
            ]
        },
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alpha(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


# ---- input ----

def _parse_value(raw, where):
    raw = raw.strip()
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"{where}: value {raw!r} is not a number") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: value {raw!r} is not finite")
    return int(value) if value == int(value) else value


def _read_csv(text):
    rows = []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip().lower() for c in row] == ["label", "value"]:
            continue
        if len(row) != 2:
            raise DataError(f"row {lineno}: expected 2 fields (label,value), got {len(row)}")
        rows.append((row[0].strip(), _parse_value(row[1], f"row {lineno}"), f"row {lineno}"))
    return rows


def _read_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise DataError("JSON input must be an array of {label, value} objects")
    rows = []
    for i, item in enumerate(data, start=1):
        where = f"row {i}"
        if not isinstance(item, dict) or set(item) != {"label", "value"}:
            raise DataError(f"{where}: expected an object with keys label and value")
        value = item["value"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DataError(f"{where}: value {value!r} is not a number")
        rows.append((str(item["label"]), _parse_value(repr(value), where), where))
    return rows


def load_rows(path):
    """Read ``(label, value, row-tag)`` triples from a CSV or JSON dataset."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise DataError(f"{path} is not UTF-8 text") from None
    rows = _read_json(text) if text.lstrip().startswith("[") else _read_csv(text)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least two rows, got {len(rows)}")
    seen = {}
    for label, _, where in rows:
        if not label:
            raise DataError(f"{where}: empty label")
        if label in seen:
            raise DataError(f"{where}: duplicate label {label!r} (first seen at {seen[label]})")
        seen[label] = where
    return rows


def _check_rows(kind, rows, m):
    for label, value, where in rows:
        if kind == "normal-variance":
            if value <= 0:
                raise DataError(f"{where} ({label}): sample variance must be positive, got {value}")
            continue
        if not isinstance(value, int):
            raise DataError(f"{where} ({label}): count must be an integer, got {value}")
        if value < 0:
            raise DataError(f"{where} ({label}): count must be nonnegative, got {value}")
        if kind == "binomial" and value > m:
            raise DataError(f"{where} ({label}): {value} successes exceed {m} trials per arm")


def build_inputs(args):
    rows = load_rows(args.data)
    kind = args.family
    n = len(rows)
    if kind == "binomial":
        if args.trials_per_arm is None:
            raise UsageError("--family binomial needs --trials-per-arm")
        m = args.trials_per_arm
    elif kind == "normal-variance":
        if args.obs_per_group is None:
            raise UsageError("--family normal-variance needs --obs-per-group")
        m = args.obs_per_group
    else:
        m = None
    _check_rows(kind, rows, m)
    values = np.array([v for _, v, _ in rows], dtype=float if kind == "normal-variance" else np.int64)
    if kind == "multinomial":
        m = int(values.sum())
        if m < 1:
            raise DataError("multinomial counts sum to zero")
    if kind == "bradley-terry" and n > 6:
        raise DataError(f"bradley-terry supports at most 6 players, got {n} rows")
    try:
        family = make_family(kind, n, m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    obs = Observation(tuple(l for l, _, _ in rows), values)
    if not family.in_support(values):
        raise DataError(f"values {values.tolist()} are not a possible {kind} outcome")
    return family, obs


# ---- output ----

def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def make_report(argv, family, alpha, seed, outcome, warnings=()):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": list(argv),
        "family": {"kind": family.kind, "n": family.n, "m": getattr(family, "m", None)},
        "alpha": alpha,
        "seed": seed,
        "outcome": _jsonable(outcome),
        "warnings": list(warnings),
    }


def _emit(report, out):
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(columns, rows, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    if out:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())


def _tie_warnings(obs, outcome):
    trace = getattr(outcome, "seed_trace", {}) or {}
    groups = trace.get("randomized_ties") or []
    return [f"tie among {', '.join(obs.labels[i] for i in g)} broken at random (seed {trace.get('seed')})"
            for g in groups]


# ---- commands ----

def cmd_verify(args, argv):
    family, obs = build_inputs(args)
    out = procedure1(family, obs, args.alpha, adjusted=args.adjusted, tie_mode=args.tie_mode,
                     seed=args.seed, randomized=args.randomized)
    _emit(make_report(argv, family, args.alpha, args.seed, out, _tie_warnings(obs, out)), args.out)


def cmd_bound(args, argv):
    family, obs = build_inputs(args)
    if args.method == "2":
        if args.randomized:
            raise UsageError("--randomized applies to --method 2prime only")
        out = procedure2(family, obs, args.alpha, tie_mode=args.tie_mode, seed=args.seed)
    else:
        out = procedure2prime(family, obs, args.alpha, tie_mode=args.tie_mode, seed=args.seed,
                              randomized=args.randomized)
    _emit(make_report(argv, family, args.alpha, args.seed, out, _tie_warnings(obs, out)), args.out)


def cmd_ranks(args, argv):
    family, obs = build_inputs(args)
    proc = procedure3 if args.method == "3" else procedure3prime
    report = proc(family, obs, args.alpha, tie_mode=args.tie_mode, seed=args.seed)
    outcome = _jsonable(report)
    outcome["order"] = [obs.labels[i] for i in report.order]
    outcome["verified"] = report.verified
    _emit(make_report(argv, family, args.alpha, args.seed, outcome, _tie_warnings(obs, report)),
          args.out)


POWER_COLUMNS = ["delta", "power_selective", "power_gn", "se_selective", "se_gn"]
SIM_COLUMNS = ["experiment", "method", "estimate", "std_error", "trials", "events", "low_precision"]


def _delta_grid(args):
    if args.delta_steps < 1:
        raise UsageError("--delta-steps must be at least 1")
    if args.delta_steps == 1:
        return [args.delta_min]
    return [float(d) for d in np.linspace(args.delta_min, args.delta_max, args.delta_steps)]


def _require_seed(args):
    if args.seed is None:
        raise UsageError("simulations are random: pass --seed")


def _run_power(args, argv):
    _require_seed(args)
    if args.m is None or args.n is None:
        raise UsageError("power curves need --m and --n")
    rows = power_curve(args.m, args.n, _delta_grid(args), args.alpha, args.trials, args.seed, args.jobs)
    table = [[r.delta, r.power_selective, r.power_gn, r.se_selective, r.se_gn] for r in rows]
    write_csv(POWER_COLUMNS, table, args.out)
    _curve_report(argv, make_family("multinomial", args.n, args.m), args, POWER_COLUMNS, table)


def _curve_report(argv, family, args, columns, table):
    # with --out the CSV goes to the file and the report to stdout
    if args.out:
        outcome = {"columns": columns, "rows": table, "csv": args.out}
        _emit(make_report(argv, family, args.alpha, args.seed, outcome), None)


def cmd_power(args, argv):
    _run_power(args, argv)


def _sim_family(args):
    if args.n is None:
        raise UsageError("--n is required")
    if args.family == "bradley-terry":
        return BradleyTerry(args.n)
    if args.m is None:
        raise UsageError(f"--family {args.family} needs --m")
    try:
        return make_family(args.family, args.n, args.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _theta(args, n):
    if args.theta is None:
        raise UsageError("this experiment needs --theta (comma-separated natural parameters)")
    try:
        theta = [float(t) for t in args.theta.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse --theta {args.theta!r}") from None
    if len(theta) != n:
        raise UsageError(f"--theta has {len(theta)} entries but --n is {n}")
    return theta


def cmd_sim(args, argv):
    if args.experiment == "power":
        _run_power(args, argv)
        return
    _require_seed(args)
    family = _sim_family(args)
    theta = _theta(args, family.n)
    rows = []
    if args.experiment == "error-rate":
        cfg = SimConfig(family, theta, "procedure1", args.alpha, args.trials, args.seed, args.jobs,
                        args.adjusted, args.randomized)
        for kind in ("conditional", "marginal"):
            res = error_rate_sim(cfg, kind)
            rows.append([f"error-rate-{kind}", "procedure1", res.estimate, res.std_error,
                         res.trials, res.events, res.low_precision])
    elif args.experiment == "coverage":
        method = args.method or "2prime"
        if method not in ("2", "2prime"):
            raise UsageError("coverage needs --method 2 or 2prime")
        cfg = SimConfig(family, theta, f"procedure{method}", args.alpha, args.trials, args.seed,
                        args.jobs, randomized=args.randomized)
        res = coverage_sim(cfg)
        rows.append(["coverage", cfg.procedure, res.estimate, res.std_error, res.trials,
                     res.events, res.low_precision])
    else:
        method = args.method or "3"
        if method not in ("3", "3prime"):
            raise UsageError("fwer needs --method 3 or 3prime")
        cfg = SimConfig(family, theta, f"procedure{method}", args.alpha, args.trials, args.seed,
                        args.jobs)
        res = error_rate_sim(cfg, "fwer")
        rows.append(["fwer", cfg.procedure, res.estimate, res.std_error, res.trials,
                     res.events, res.low_precision])
    write_csv(SIM_COLUMNS, rows, args.out)
    _curve_report(argv, family, args, SIM_COLUMNS, rows)


def cmd_schema(args, argv):
    sys.stdout.write(json.dumps(REPORT_SCHEMA, indent=2) + "\n")


def _data_options(p):
    p.add_argument("--data", required=True, help="CSV (label,value) or JSON [{label, value}] file")
    p.add_argument("--family", default="multinomial",
                   choices=["multinomial", "binomial", "normal-variance", "bradley-terry"])
    p.add_argument("--trials-per-arm", type=_positive_int, help="binomial: trials per arm")
    p.add_argument("--obs-per-group", type=_positive_int, help="normal-variance: observations per group")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--seed", type=int, help="required whenever randomness is used")
    p.add_argument("--tie-mode", choices=["random", "lowest-index"], default="random")
    p.add_argument("--out", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankverify", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="is the winner the best population?")
    _data_options(p)
    p.add_argument("--adjusted", action="store_true", help="test at level n/(n-1) alpha")
    p.add_argument("--randomized", action="store_true", help="randomized p-value (needs --seed)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bound", help="lower confidence bound on the winner's lead")
    _data_options(p)
    p.add_argument("--method", choices=["2", "2prime"], default="2prime")
    p.add_argument("--randomized", action="store_true")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("ranks", help="how many leading ranks are verified?")
    _data_options(p)
    p.add_argument("--method", choices=["3", "3prime"], default="3")
    p.set_defaults(func=cmd_ranks)

    for name, func in (("power", cmd_power), ("sim", cmd_sim)):
        p = sub.add_parser(name, help="power curve" if name == "power" else "simulation experiments")
        if name == "sim":
            p.add_argument("--experiment", choices=["power", "error-rate", "coverage", "fwer"],
                           default="power")
            p.add_argument("--family", default="multinomial",
                           choices=["multinomial", "binomial", "normal-variance", "bradley-terry"])
            p.add_argument("--theta", help="comma-separated natural parameters")
            p.add_argument("--method", choices=["2", "2prime", "3", "3prime"])
            p.add_argument("--adjusted", action="store_true")
            p.add_argument("--randomized", action="store_true")
        p.add_argument("--m", type=_positive_int, help="total count / per-population size")
        p.add_argument("--n", type=_positive_int, help="number of populations")
        p.add_argument("--alpha", type=_alpha, default=0.05)
        p.add_argument("--trials", type=_positive_int, default=10_000)
        p.add_argument("--seed", type=int)
        p.add_argument("--delta-min", type=float, default=0.0)
        p.add_argument("--delta-max", type=float, default=3.0)
        p.add_argument("--delta-steps", type=int, default=13, help="number of grid points")
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
        p.add_argument("--out", help="CSV destination (default stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("schema", help="print the JSON schema of reports")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args, argv)
    except (UsageError, SeedRequired) as exc:
        print(f"rankverify: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"rankverify: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"rankverify: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Every subcommand writes a CSV table (or JSON lines with ``--format jsonl``)
to stdout or to ``--out``.  Relative ``--out`` paths are resolved against
``$SEQMC_OUTPUT_DIR`` when it is set.  ``run`` exits 0 on a decision, 2 on
no decision and 1 on any error.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys

import numpy as np

from .core import Decision, SourceExhausted, TestConfig
from .csm import CsmBoundaryTable, csm_boundaries, csm_run
from .risk import expected_stopping_time, hitting_probabilities, resampling_risk, spend_rate_series
from .simctest import (
    SimctestBuilder,
    SpendingSequence,
    load_boundaries,
    save_boundaries,
    simctest_boundaries,
    simctest_run,
)
from .sources import fixed_p_source, file_source, load_two_sample_csv, penguin_bootstrap_source, PENGUINS
from .truncated import TruncatedConfig, truncated_risk_curve, write_risk_curve

OUTPUT_DIR_ENV = "SEQMC_OUTPUT_DIR"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, Decision):
        return v.value
    return v


def _out_path(path):
    if path is None or path == "-":
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _emit(args, columns, rows):
    buf = io.StringIO()
    if getattr(args, "format", "csv") == "jsonl":
        for row in rows:
            buf.write(json.dumps({c: _jsonable(v) for c, v in zip(columns, row)}) + "\n")
    else:
        buf.write(",".join(columns) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
    path = _out_path(getattr(args, "out", None))
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _floats(text: str):
    """``a,b,c`` or ``start:stop:count`` (inclusive linspace)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"grid {text!r} must look like start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(x) for x in np.linspace(start, stop, count)]
    return [float(x) for x in text.split(",") if x.strip()]


def _cfg(args, max_steps=None):
    try:
        return TestConfig(args.alpha, args.epsilon, max_steps)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _seq(args):
    try:
        return SpendingSequence.parse(args.spending, args.epsilon)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _bounds(args, n_max):
    if getattr(args, "bounds", None):
        b = load_boundaries(args.bounds)
        if b.n_max < n_max:
            raise CliError(f"{args.bounds} covers {b.n_max} steps, {n_max} needed")
        return b.truncate(n_max)
    cfg = _cfg(args)
    if args.method == "csm":
        return csm_boundaries(n_max, cfg)
    return simctest_boundaries(n_max, cfg, _seq(args))


def _add_common(p, method=True, spending=True):
    if method:
        p.add_argument("--method", choices=["csm", "simctest"], default="csm")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=1e-3)
    if spending:
        p.add_argument("--spending", default="default:k=1000",
                       help="default:k=K | truncated:L=..,U=..,k=K | power:gamma=G,k=K")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")


def cmd_run(args):
    chosen = [x for x in (args.p is not None, args.input is not None, args.demo is not None) if x]
    if len(chosen) != 1:
        raise CliError("give exactly one of --p, --input, --demo")
    if args.p is not None:
        source = fixed_p_source(args.p, args.seed)
    elif args.input is not None:
        source = file_source(args.input)
    else:
        data = PENGUINS if args.data is None else load_two_sample_csv(args.data)
        source = penguin_bootstrap_source(data, args.seed)
    cfg = _cfg(args, args.max_steps)
    if args.method == "csm":
        result = csm_run(source, cfg, CsmBoundaryTable(TestConfig(cfg.alpha, cfg.epsilon)))
    elif args.bounds:
        result = simctest_run(source, load_boundaries(args.bounds), args.max_steps)
    else:
        result = simctest_run(source, SimctestBuilder(TestConfig(cfg.alpha, cfg.epsilon), _seq(args)),
                              args.max_steps)
    _emit(args, ["method", "steps", "successes", "estimate", "decision", "stopped_by"],
          [[args.method, result.steps, result.successes, result.estimate, result.decision.value,
            result.stopped_by]])
    return 2 if result.decision is Decision.NO_DECISION else 0


def cmd_boundaries(args):
    bounds = _bounds(args, args.n_max)
    path = _out_path(args.out)
    if path is None:
        save_boundaries(bounds, sys.stdout)
    else:
        save_boundaries(bounds, path)
    return 0


def cmd_compare(args):
    cfg = _cfg(args)
    c = csm_boundaries(args.n_max, cfg)
    s = simctest_boundaries(args.n_max, cfg, _seq(args))
    rows = []
    for n in range(1, args.n_max + 1):
        l, u = c.at(n)
        lo, up = s.at(n)
        rows.append([n, l, u, lo, up, u - l, up - lo, (u - l) / (up - lo), u - up, lo - l])
    _emit(args, ["n", "csm_lower", "csm_upper", "simctest_lower", "simctest_upper",
                 "csm_width", "simctest_width", "width_ratio", "upper_diff", "lower_diff"], rows)
    return 0


def cmd_risk(args):
    if args.method == "besag_clifford" or args.cap is not None:
        if args.cap is None:
            raise CliError("--cap is required for truncated risk curves")
        cfg = TruncatedConfig(args.method, args.cap, args.alpha, args.epsilon,
                              None if args.method != "simctest" else _seq(args), args.h)
        grid = _floats(args.p_grid)
        if args.method != "besag_clifford" and not args.force:
            b = cfg.boundaries()
            rows = [(p, resampling_risk(b, p, args.alpha, args.cap, "none")) for p in grid]
        else:
            rows = truncated_risk_curve(cfg, grid, "mc" if args.mc_runs else "exact",
                                        args.mc_runs or 0, args.seed)
        path = _out_path(args.out)
        if args.format == "csv":
            write_risk_curve(rows, path if path else sys.stdout)
        else:
            _emit(args, ["p", "risk"], rows)
        return 0
    b = _bounds(args, args.n_max)
    p = args.alpha if args.p is None else args.p
    trace = hitting_probabilities(b, p)
    rows = [[n, trace.upper[n - 1], trace.lower[n - 1], trace.alive[n - 1]]
            for n in range(args.stride, b.n_max + 1, args.stride)]
    _emit(args, ["n", "upper", "lower", "alive"], rows)
    return 0


def cmd_effort(args):
    rows = []
    for eps in _floats(args.epsilon_list):
        cfg = TestConfig(args.alpha, eps)
        for p in _floats(args.p_grid):
            if args.method == "csm":
                table = CsmBoundaryTable(cfg)
            else:
                table = SimctestBuilder(cfg, SpendingSequence.parse(args.spending, eps))
            r = expected_stopping_time(table, p, args.tail_tol, args.cap)
            rows.append([eps, p, r.expectation, r.residual_mass, r.steps, r.converged])
    rows.sort(key=lambda r: (-r[0], r[1]))
    _emit(args, ["epsilon", "p", "expected_steps", "residual_mass", "steps", "converged"], rows)
    return 0


def cmd_rate(args):
    b = _bounds(args, args.n_max)
    rows = []
    sides = ["upper", "lower"] if args.side == "both" else [args.side]
    for side in sides:
        for l in _floats(args.l_list):
            series = spend_rate_series(b, l, args.stride, args.burn_in, side)
            print(f"# {side} l={l!r} fitted slope={series.slope!r}", file=sys.stderr)
            rows.extend([side, l, n, v] for n, v in zip(series.n.tolist(), series.value.tolist()))
    _emit(args, ["side", "l", "n", "value"], rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run CSM or SIMCTEST on a stream")
    _add_common(p)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p", type=float, help="synthetic Bernoulli(p) stream")
    p.add_argument("--input", help="file with one 0 or 1 per line")
    p.add_argument("--demo", choices=["penguins"], help="bootstrap Welch-t demo")
    p.add_argument("--data", help="group,count CSV replacing the built-in penguin counts")
    p.add_argument("--bounds", help="precomputed SIMCTEST boundary file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("boundaries", help="write a boundary cache file")
    _add_common(p)
    p.add_argument("--n-max", type=int, default=5000)
    p.set_defaults(func=cmd_boundaries)

    p = sub.add_parser("compare", help="CSM vs SIMCTEST boundary widths and differences")
    _add_common(p, method=False)
    p.add_argument("--n-max", type=int, default=5000)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("risk", help="hitting-probability trace or truncated risk curve")
    _add_common(p, method=False)
    p.add_argument("--method", choices=["csm", "simctest", "besag_clifford"], default="csm")
    p.add_argument("--bounds", help="boundary cache file instead of --method")
    p.add_argument("--n-max", type=int, default=50000)
    p.add_argument("--p", type=float, help="trace: success probability (default alpha)")
    p.add_argument("--stride", type=int, default=100)
    p.add_argument("--p-grid", default="0:1:21")
    p.add_argument("--cap", type=int, help="truncate at this many samples (risk curve mode)")
    p.add_argument("--force", action="store_true", help="force a decision at the cap")
    p.add_argument("--h", type=int, default=10, help="Besag-Clifford exceedance count")
    p.add_argument("--mc-runs", type=int, default=0, help="Monte Carlo instead of exact")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("effort", help="expected number of steps over a p grid")
    _add_common(p)
    p.set_defaults(epsilon=None)
    p.add_argument("--p-grid", default="0:0.04:5")
    p.add_argument("--epsilon-list", default="0.01,0.001,0.0001")
    p.add_argument("--tail-tol", type=float, default=1e-8)
    p.add_argument("--cap", type=int, default=10**6)
    p.set_defaults(func=cmd_effort)

    p = sub.add_parser("rate", help="per-step spending rate series")
    _add_common(p)
    p.add_argument("--bounds", help="boundary cache file instead of --method")
    p.add_argument("--n-max", type=int, default=50000)
    p.add_argument("--l-list", default="1.4,1.5,1.6")
    p.add_argument("--stride", type=int, default=100)
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--side", choices=["upper", "lower", "both"], default="both")
    p.set_defaults(func=cmd_rate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, IndexError, SourceExhausted) as exc:
        print(f"seqmc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

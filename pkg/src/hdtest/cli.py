"""hdtest command line: run, diagnose, simulate.

Exit status is 0 whenever a result was computed (rejection is reported in
the JSON, not the exit code) and 1 for usage or data errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import scenarios
from .errors import DimensionMismatch, HDTestError
from .matcore import load_csv
from .modelcheck import diagnose, select_k
from .procedures import MatrixChoice, test_adaptive, test_chi2, test_naive, test_normal, test_sse
from .simharness import ExperimentGrid, GridResult, run_grid

log = logging.getLogger("hdtest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _alpha(text: str) -> float:
    a = float(text)
    if not 0 < a < 0.5:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 0.5)")
    return a


def _nonneg(text: str) -> int:
    k = int(text)
    if k < 0:
        raise argparse.ArgumentTypeError("k must be nonnegative")
    return k


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_pair(args):
    for f in (args.group1, args.group2):
        if not Path(f).is_file():
            raise UsageError(f"no such file: {f}")
    s1, s2 = load_csv(args.group1), load_csv(args.group2)
    if s1.p != s2.p:
        raise DimensionMismatch(f"group1 has {s1.p} columns, group2 has {s2.p}")
    return s1, s2


def cmd_run(args) -> int:
    s1, s2 = _load_pair(args)
    proc, alpha = args.procedure, args.alpha
    if proc == "auto":
        res = test_adaptive(s1, s2, alpha=alpha)
    elif proc == "normal":
        tag = "identity" if args.matrix == "identity" else "a_star_diag_estimated"
        res = test_normal(s1, s2, MatrixChoice(tag), alpha=alpha)
    elif proc == "chi2":
        res = test_chi2(s1, s2, alpha=alpha)
    else:
        k1 = select_k(s1) if args.k1 is None else args.k1
        k2 = select_k(s2) if args.k2 is None else args.k2
        fn = test_sse if proc == "sse" else test_naive
        res = fn(s1, s2, k1, k2, alpha=alpha)
    _emit(res.to_dict(), args.out)
    return 0


def cmd_diagnose(args) -> int:
    s1, s2 = _load_pair(args)
    _emit(diagnose(s1, s2).to_dict(), args.out)
    return 0


def load_experiments(config: str, reps=None, seed=None, p_values=None) -> list[ExperimentGrid]:
    """A JSON file (one grid or a list) or the name of a built-in scenario."""
    path = Path(config)
    if path.is_file():
        raw = json.loads(path.read_text())
        grids = [ExperimentGrid.from_dict(d) for d in (raw if isinstance(raw, list) else [raw])]
        if p_values:
            for g in grids:
                g.grid = [t for t in g.grid if t[0] in p_values]
    elif config in scenarios.NAMED:
        grids = scenarios.named(config, p_values=p_values)
    else:
        raise UsageError(f"{config!r} is neither a config file nor a scenario ({', '.join(scenarios.NAMED)})")
    out = []
    for g in grids:
        if reps is not None:
            g = dataclasses.replace(g, reps=reps)
        if seed is not None:
            g = dataclasses.replace(g, seed=seed)
        out.append(g)
    return out


def cmd_simulate(args) -> int:
    threads = args.threads or int(os.environ.get("HDTEST_THREADS", "1"))
    if threads < 1:
        raise UsageError("threads must be >= 1")
    grids = load_experiments(args.config, args.reps, args.seed, args.p)
    rows = []
    for g in grids:
        if args.alpha is not None:
            g = dataclasses.replace(g, alpha=args.alpha)
        rows.extend(run_grid(g, threads=threads, overlays=not args.no_overlay).rows)
    result = GridResult(rows)
    out = Path(args.out)
    result.write_csv(out, timing=args.timing)
    result.write_json(out.with_suffix(".json"))
    log.info("wrote %d rows to %s", len(rows), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hdtest", description="High-dimensional two-sample mean tests.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--group1", required=True, help="CSV, one observation per row")
        p.add_argument("--group2", required=True)
        p.add_argument("--out", help="JSON output path (stdout if omitted)")

    run = sub.add_parser("run", help="test equality of two mean vectors")
    data_args(run)
    run.add_argument("--procedure", choices=["auto", "normal", "chi2", "sse", "naive"], default="auto")
    run.add_argument("--matrix", choices=["identity", "diag-est"], default="identity")
    run.add_argument("--k1", type=_nonneg)
    run.add_argument("--k2", type=_nonneg)
    run.add_argument("--alpha", type=_alpha, default=0.05)
    run.set_defaults(func=cmd_run)

    dg = sub.add_parser("diagnose", help="SSE/NSSE verdict and spike counts")
    data_args(dg)
    dg.set_defaults(func=cmd_diagnose)

    sim = sub.add_parser("simulate", help="Monte Carlo size and power")
    sim.add_argument("--config", required=True, help="JSON config or scenario name")
    sim.add_argument("--out", required=True, help="CSV path; a .json mirror is written alongside")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int)
    sim.add_argument("--alpha", type=_alpha)
    sim.add_argument("--p", type=int, nargs="+", help="restrict the grid to these dimensions")
    sim.add_argument("--timing", action="store_true", help="fill ms_per_rep (makes the CSV run-dependent)")
    sim.add_argument("--no-overlay", action="store_true")
    sim.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (HDTestError, UsageError, ValueError, KeyError, OSError) as exc:
        print(f"hdtest: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

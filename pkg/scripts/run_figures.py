"""Reproduce the main simulation figures at desk scale.

    python3 scripts/run_figures.py --reps 2000 --p 64 256 1024 --outdir results/

Writes one CSV (plus a JSON mirror) per scenario and prints a compact table.
"""
import argparse
import time
from pathlib import Path

from hdtest import scenarios
from hdtest.simharness import GridResult, run_grid


def table(res: GridResult):
    hyps = sorted({r.hypothesis for r in res.rows}, key=lambda h: (h != "null", h))
    for p in sorted({r.p for r in res.rows}):
        print(f"  p={p}")
        for proc in dict.fromkeys(r.procedure for r in res.rows):
            cells = []
            for h in hyps:
                row = res.get(p, proc, h)
                ov = "" if row.overlay is None else f" ({row.overlay:.3f})"
                cells.append(f"{h}={row.reject_freq:.3f}{ov}")
            print(f"    {proc:<20s}" + "  ".join(cells))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--names", nargs="+", default=["fig1", "fig2a", "fig2b", "fig2c"])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p", type=int, nargs="*", default=None)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    for name in args.names:
        for i, exp in enumerate(scenarios.named(name, reps=args.reps, seed=args.seed, p_values=args.p)):
            t0 = time.perf_counter()
            res = run_grid(exp, threads=args.threads)
            stem = args.outdir / (exp.scenario if exp.scenario else f"{name}_{i}")
            res.write_csv(stem.with_suffix(".csv"))
            res.write_json(stem.with_suffix(".json"))
            print(f"{exp.scenario}: {time.perf_counter() - t0:.0f}s -> {stem}.csv")
            table(res)


if __name__ == "__main__":
    main()

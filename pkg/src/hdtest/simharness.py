"""Monte Carlo engine for empirical size and power.

Every replication r at grid point g draws population i from
``seeded_stream(seed, r, g, i)``, so results do not depend on the number
of worker threads or on evaluation order.  Alternatives reuse the null
draws shifted by the alternative mean (common random numbers).
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import DistSpec, MeanPattern, Sampler, population_cov, seeded_stream
from .errors import HDTestError, OracleRequired
from .matcore import PsdMatrix, Sample
from .modelcheck import select_k
from .procedures import (
    MatrixChoice,
    a_star,
    a_star_diag,
    population_moments,
    population_moments_star,
    test_adaptive,
    test_chi2,
    test_naive,
    test_normal,
    test_sse,
)

log = logging.getLogger(__name__)

# aborts a grid point when more than this share of replications fail
ABORT_SHARE = 0.10

PROCEDURES = (
    "normal_I",
    "normal_astar",
    "normal_astar_d",
    "normal_astar_d_hat",
    "chi2",
    "sse",
    "sse_khat",
    "naive",
    "adaptive",
)

CSV_COLUMNS = ("scenario", "p", "n1", "n2", "procedure", "hypothesis", "reject_freq",
               "se", "overlay", "degenerate", "ms_per_rep")


@dataclass
class ExperimentGrid:
    scenario: str
    pop1: DistSpec
    pop2: DistSpec
    grid: list[tuple[int, int, int]]
    procedures: list[str]
    hypotheses: dict[str, MeanPattern] = field(default_factory=lambda: {"null": MeanPattern()})
    true_k: tuple[int, int] = (0, 0)
    reps: int = 500
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        unknown = set(self.procedures) - set(PROCEDURES)
        if unknown:
            raise ValueError(f"unknown procedures: {sorted(unknown)}")
        self.grid = [tuple(int(v) for v in g) for g in self.grid]
        self.true_k = tuple(int(k) for k in self.true_k)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "populations": [self.pop1.to_dict(), self.pop2.to_dict()],
            "grid": [list(g) for g in self.grid],
            "procedures": list(self.procedures),
            "hypotheses": {k: v.to_dict() for k, v in self.hypotheses.items()},
            "true_k": list(self.true_k),
            "reps": self.reps,
            "seed": self.seed,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentGrid:
        pops = d["populations"]
        return cls(
            scenario=d.get("scenario", "custom"),
            pop1=DistSpec.from_dict(pops[0]),
            pop2=DistSpec.from_dict(pops[1]),
            grid=d["grid"],
            procedures=d["procedures"],
            hypotheses={k: MeanPattern(**v) for k, v in d.get("hypotheses", {"null": {}}).items()},
            true_k=tuple(d.get("true_k", (0, 0))),
            reps=int(d.get("reps", 500)),
            seed=int(d.get("seed", 0)),
            alpha=float(d.get("alpha", 0.05)),
        )


@dataclass
class GridRow:
    scenario: str
    p: int
    n1: int
    n2: int
    procedure: str
    hypothesis: str
    reject_freq: float
    se: float
    overlay: float | None
    degenerate: int
    ms_per_rep: float
    failed: int = 0
    aborted: bool = False


@dataclass
class GridResult:
    rows: list[GridRow]

    def get(self, p: int, procedure: str, hypothesis: str) -> GridRow:
        for r in self.rows:
            if r.p == p and r.procedure == procedure and r.hypothesis == hypothesis:
                return r
        raise KeyError((p, procedure, hypothesis))

    def csv_rows(self, timing: bool = False) -> list[list[str]]:
        out = []
        for r in self.rows:
            out.append([
                r.scenario, str(r.p), str(r.n1), str(r.n2), r.procedure, r.hypothesis,
                "nan" if r.aborted else f"{r.reject_freq:.6f}",
                "nan" if r.aborted else f"{r.se:.6f}",
                "" if r.overlay is None else f"{r.overlay:.6f}",
                str(r.degenerate),
                f"{r.ms_per_rep:.3f}" if timing else "",
            ])
        return out

    def write_csv(self, path, timing: bool = False) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            w.writerows(self.csv_rows(timing))

    def to_json(self) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(r.__dict__)
            if r.aborted:
                d["reject_freq"] = d["se"] = None
            out.append(d)
        return out

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


# ----------------------------------------------------------- one grid point

class _Point:
    """Everything fixed at one (p, n1, n2): samplers, oracle matrices, means."""

    def __init__(self, exp: ExperimentGrid, index: int):
        self.exp = exp
        self.index = index
        self.p, self.n1, self.n2 = exp.grid[index]
        p = self.p
        self.samplers = (Sampler(exp.pop1, p), Sampler(exp.pop2, p))
        self.mu1 = self.samplers[0].mu
        self.mu2 = {h: m.vector(p) for h, m in exp.hypotheses.items()}
        self._sigma = None
        self.matrices: dict[str, PsdMatrix] = {}
        if "normal_astar" in exp.procedures:
            s1, s2 = self.sigmas
            self.matrices["normal_astar"] = a_star(s1, s2, self.n1, self.n2)
        if "normal_astar_d" in exp.procedures:
            s1, s2 = self.sigmas
            self.matrices["normal_astar_d"] = a_star_diag(np.diag(s1), np.diag(s2), self.n1, self.n2)

    @property
    def sigmas(self):
        if self._sigma is None:
            self._sigma = (population_cov(self.exp.pop1, self.p), population_cov(self.exp.pop2, self.p))
        return self._sigma

    def overlay(self, procedure: str, hypothesis: str) -> float | None:
        return overlay_power(self, procedure, hypothesis)

    def evaluate(self, procedure: str, s1: Sample, s2: Sample):
        alpha = self.exp.alpha
        k1, k2 = self.exp.true_k
        if procedure == "normal_I":
            return test_normal(s1, s2, alpha=alpha)
        if procedure in self.matrices:
            return test_normal(s1, s2, alpha=alpha, a=self.matrices[procedure])
        if procedure == "normal_astar_d_hat":
            return test_normal(s1, s2, MatrixChoice("a_star_diag_estimated"), alpha=alpha)
        if procedure == "chi2":
            return test_chi2(s1, s2, alpha=alpha)
        if procedure == "sse":
            return test_sse(s1, s2, k1, k2, alpha=alpha)
        if procedure == "sse_khat":
            return test_sse(s1, s2, select_k(s1), select_k(s2), alpha=alpha)
        if procedure == "naive":
            return test_naive(s1, s2, k1, k2, alpha=alpha)
        if procedure == "adaptive":
            return test_adaptive(s1, s2, alpha=alpha)
        raise ValueError(procedure)

    def replicate(self, r: int):
        """(reject, degenerate, failed, seconds) indexed [hypothesis][procedure]."""
        exp = self.exp
        rng1 = seeded_stream(exp.seed, r, self.index, 1)
        rng2 = seeded_stream(exp.seed, r, self.index, 2)
        x1 = self.samplers[0].centered(self.n1, rng1)
        x2 = self.samplers[1].centered(self.n2, rng2)
        s1 = Sample(x1 + self.mu1[:, None])
        out = {}
        for h, mu2 in self.mu2.items():
            s2 = Sample(x2 + mu2[:, None])
            row = {}
            for proc in exp.procedures:
                t0 = time.perf_counter()
                try:
                    res = self.evaluate(proc, s1, s2)
                    row[proc] = (res.reject, res.degenerate, False, time.perf_counter() - t0)
                except HDTestError as exc:
                    log.debug("rep %d %s failed: %s", r, proc, exc)
                    row[proc] = (False, True, True, time.perf_counter() - t0)
            out[h] = row
        return out


def overlay_power(point: _Point, procedure: str, hypothesis: str) -> float | None:
    """Asymptotic power from population quantities, or None when no formula applies."""
    exp = point.exp
    mu2 = point.mu2[hypothesis]
    s1, s2 = point.sigmas
    n1, n2 = point.n1, point.n2
    if procedure == "normal_I":
        mom = population_moments(s1, s2, point.mu1, mu2, n1, n2)
    elif procedure in ("normal_astar", "normal_astar_d"):
        if procedure not in point.matrices:
            raise OracleRequired(procedure)
        mom = population_moments(s1, s2, point.mu1, mu2, n1, n2, point.matrices[procedure])
    elif procedure in ("sse", "sse_khat"):
        mom = population_moments_star(s1, s2, point.mu1, mu2, n1, n2, *exp.true_k)
    else:
        return None
    return mom.power(exp.alpha)


def run_grid(exp: ExperimentGrid, threads: int = 1, overlays: bool = True) -> GridResult:
    rows: list[GridRow] = []
    reps = exp.reps
    for g in range(len(exp.grid)):
        point = _Point(exp, g)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(point.replicate, range(reps)))
        else:
            results = [point.replicate(r) for r in range(reps)]
        for h in exp.hypotheses:
            for proc in exp.procedures:
                cells = [res[h][proc] for res in results]
                failed = sum(c[2] for c in cells)
                degenerate = sum(c[1] for c in cells)
                rejects = sum(c[0] for c in cells if not c[2])
                used = reps - failed
                aborted = failed > ABORT_SHARE * reps or used == 0
                freq = rejects / used if used else float("nan")
                se = float(np.sqrt(freq * (1 - freq) / used)) if used else float("nan")
                ov = point.overlay(proc, h) if overlays else None
                rows.append(GridRow(
                    scenario=exp.scenario, p=point.p, n1=point.n1, n2=point.n2,
                    procedure=proc, hypothesis=h, reject_freq=freq, se=se, overlay=ov,
                    degenerate=degenerate, ms_per_rep=1000.0 * sum(c[3] for c in cells) / reps,
                    failed=failed, aborted=aborted,
                ))
        log.info("%s p=%d n=(%d,%d) done", exp.scenario, point.p, point.n1, point.n2)
    return GridResult(rows)

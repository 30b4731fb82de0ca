"""Built-in simulation designs (fig1, fig2a-c, s4_1, s4_2)."""
from __future__ import annotations

from math import ceil, sqrt

from .datagen import CovSpec, DistSpec, MeanPattern
from .simharness import ExperimentGrid

NSSE_PROCEDURES = ["normal_I", "normal_astar", "normal_astar_d", "normal_astar_d_hat"]
SSE_PROCEDURES = ["normal_I", "chi2", "sse", "sse_khat", "naive"]

POW2 = [2 ** s for s in range(4, 11)]


def _csqrt(p: int) -> int:
    return ceil(sqrt(p))


def _spiked(rho=0.3, c=1.0) -> CovSpec:
    return CovSpec("spiked_block", rho=rho, multiplier=c)


def fig1(reps=500, seed=0, p_values=None) -> list[ExperimentGrid]:
    cov = CovSpec("scaled_power_corr", rho=0.3)
    ps = p_values or POW2
    return [ExperimentGrid(
        scenario="fig1",
        pop1=DistSpec("gaussian", cov), pop2=DistSpec("gaussian", cov),
        grid=[(p, _csqrt(p), _csqrt(p)) for p in ps],
        procedures=list(NSSE_PROCEDURES),
        hypotheses={"null": MeanPattern(), "b": MeanPattern("first", 10), "c": MeanPattern("last", 10)},
        reps=reps, seed=seed,
    )]


def _sse_grid(name, fam1, fam2, grid, reps, seed) -> ExperimentGrid:
    return ExperimentGrid(
        scenario=name, pop1=fam1, pop2=fam2, grid=grid,
        procedures=list(SSE_PROCEDURES),
        hypotheses={"null": MeanPattern(), "alt": MeanPattern("last", 4)},
        true_k=(2, 2), reps=reps, seed=seed,
    )


def _grid_a(p_values):
    return [(p, 3 * _csqrt(p), 4 * _csqrt(p)) for p in (p_values or POW2)]


def _grid_b(p_values):
    return [(p, 40, 60) for p in (p_values or [50 + 100 * (s - 1) for s in range(1, 8)])]


def _grid_c(p_values):
    p = (p_values or [500])[0]
    return [(p, 10 * s, 15 * s) for s in range(2, 9)]


def fig2a(reps=500, seed=0, p_values=None):
    return [_sse_grid("fig2a", DistSpec("gaussian", _spiked()), DistSpec("gaussian", _spiked(c=1.5)),
                      _grid_a(p_values), reps, seed)]


def fig2b(reps=500, seed=0, p_values=None):
    return [_sse_grid("fig2b", DistSpec("mvt", _spiked(), df=15), DistSpec("mvt", _spiked(c=1.5), df=15),
                      _grid_b(p_values), reps, seed)]


def fig2c(reps=500, seed=0, p_values=None):
    return [_sse_grid("fig2c", DistSpec("chisq_marginal", _spiked()),
                      DistSpec("chisq_marginal", _spiked(c=1.5)), _grid_c(p_values), reps, seed)]


def s4_1(reps=500, seed=0, p_values=None):
    out = []
    for case, shape in (("a", 1.0), ("b", 4.0), ("c", 16.0)):
        pop1 = DistSpec("skew_normal", CovSpec("power_corr", rho=0.3), shape=shape)
        pop2 = DistSpec("skew_normal", CovSpec("power_corr", rho=0.3, multiplier=1.5), shape=shape)
        out.append(ExperimentGrid(
            scenario=f"s4_1{case}", pop1=pop1, pop2=pop2,
            grid=[(p, _csqrt(p), 2 * _csqrt(p)) for p in (p_values or POW2)],
            procedures=list(NSSE_PROCEDURES),
            hypotheses={"null": MeanPattern(), "alt": MeanPattern("first_last", 5)},
            reps=reps, seed=seed,
        ))
    return out


def s4_2(reps=500, seed=0, p_values=None):
    out = []
    for case, shape in (("a", 4.0), ("b", 16.0)):
        out.append(_sse_grid(
            f"s4_2_msn_{case}",
            DistSpec("skew_normal", _spiked(0.3), shape=shape),
            DistSpec("skew_normal", _spiked(0.5), shape=shape),
            _grid_a(p_values), reps, seed))
    for design, grid in (("i", _grid_b(p_values)), ("ii", _grid_c(p_values))):
        for case, nu in (("a", 10.0), ("b", 20.0)):
            out.append(_sse_grid(
                f"s4_2_mst_{design}{case}",
                DistSpec("skew_t", _spiked(0.3), df=nu, shape=10.0),
                DistSpec("skew_t", _spiked(0.5), df=nu, shape=10.0),
                grid, reps, seed))
    return out


NAMED = {"fig1": fig1, "fig2a": fig2a, "fig2b": fig2b, "fig2c": fig2c, "s4_1": s4_1, "s4_2": s4_2}


def named(name: str, reps=500, seed=0, p_values=None) -> list[ExperimentGrid]:
    if name not in NAMED:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(NAMED)}")
    return NAMED[name](reps=reps, seed=seed, p_values=p_values)

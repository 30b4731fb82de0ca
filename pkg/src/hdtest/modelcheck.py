"""NSSE / SSE discrimination and spike-count selection."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .estimators import cdm_estimates, nr_eigenvalues, w_stat
from .matcore import Sample

KappaFn = Callable[[int], float]


def kappa(n: int) -> float:
    """Default threshold sqrt(log(n) / n)."""
    if n < 2:
        raise ValueError("kappa needs n >= 2")
    return float(np.sqrt(np.log(n) / n))


def kappa_power(c: float) -> KappaFn:
    """Alternative threshold n^-c with 0 < c < 1/2."""
    if not 0 < c < 0.5:
        raise ValueError("power threshold needs 0 < c < 1/2")

    def fn(n: int) -> float:
        return float(n ** (-c))

    return fn


@dataclass
class ModelDiagnosis:
    eta: tuple[float, float]
    kappa: tuple[float, float]
    sse: bool
    k_hat: tuple[int, int] | None = None
    tau_trace: tuple[list, list] | None = None
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "eta1": _json_float(self.eta[0]),
            "eta2": _json_float(self.eta[1]),
            "kappa1": self.kappa[0],
            "kappa2": self.kappa[1],
            "sse": self.sse,
            "k1": None if self.k_hat is None else self.k_hat[0],
            "k2": None if self.k_hat is None else self.k_hat[1],
            "tau_trace": d["tau_trace"],
            "flags": self.flags,
        }


def _json_float(x: float):
    return x if np.isfinite(x) else "inf"


def eta_hat(sample: Sample) -> tuple[float, bool]:
    """(eta, flagged): lambda~_1^2 / W_n, +inf when W_n <= 0."""
    w = w_stat(sample).value
    lam1 = nr_eigenvalues(sample.summary)[0]
    if w <= 0:
        return float("inf"), True
    return float(lam1 * lam1 / w), False


def sse_check(s1: Sample, s2: Sample, kappa_fn: KappaFn = kappa) -> ModelDiagnosis:
    etas, flags = [], []
    for i, s in enumerate((s1, s2), start=1):
        s.require(4)
        e, bad = eta_hat(s)
        etas.append(e)
        if bad:
            flags.append(f"W{i} <= 0: eta{i} set to inf")
    kap = (kappa_fn(s1.n), kappa_fn(s2.n))
    sse = bool(etas[0] >= kap[0] or etas[1] >= kap[1])
    return ModelDiagnosis(eta=(etas[0], etas[1]), kappa=kap, sse=sse, flags=flags)


def tau_tilde(sample: Sample, kappa_fn: KappaFn = kappa) -> np.ndarray:
    """tau-hat_(j) * (1 + j kappa(n)) for j = 1..n(2)-1."""
    cdm = cdm_estimates(sample)
    j = np.arange(1, cdm.n_second)
    return cdm.tau * (1.0 + j * kappa_fn(sample.n))


def select_k(sample: Sample, kappa_fn: KappaFn = kappa) -> int:
    """First j >= 0 with tau-hat_(j+1) (1 + (j+1) kappa) > 1, capped at n(2)-2."""
    sample.require(6)
    cdm = cdm_estimates(sample)
    cap = cdm.n_second - 2
    kap = kappa_fn(sample.n)
    psi = cdm.psi
    for j in range(cap + 1):
        if psi[j] <= 0:
            return cap
        tau = psi[j + 1] / psi[j]
        if tau * (1.0 + (j + 1) * kap) > 1.0:
            return j
    return cap


def diagnose(s1: Sample, s2: Sample, kappa_fn: KappaFn = kappa) -> ModelDiagnosis:
    """Full diagnosis: eta rule plus spike counts for both populations."""
    d = sse_check(s1, s2, kappa_fn)
    d.k_hat = (select_k(s1, kappa_fn), select_k(s2, kappa_fn))
    d.tau_trace = tuple(
        [float(t) if np.isfinite(t) else None for t in tau_tilde(s, kappa_fn)] for s in (s1, s2)
    )
    return d

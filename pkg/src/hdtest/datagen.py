"""Covariance builders and reproducible generators for the simulation designs.

Non-skewed families follow x = Sigma^1/2 w + mu with w standardized to
mean zero and identity covariance.  Skew-normal and skew-t families are
drawn from their stochastic representation and recentred; their
realized covariance is the closed form returned by ``population_cov``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi, sqrt

import numpy as np

from .errors import BadDimension, BadFamilyParams
from .matcore import PsdMatrix, Sample, sqrt_psd

FAMILIES = ("gaussian", "mvt", "chisq_marginal", "skew_normal", "skew_t")
COV_KINDS = ("identity", "power_corr", "scaled_power_corr", "spiked_block", "custom")


@dataclass(frozen=True)
class CovSpec:
    """Covariance design.

    power_corr         multiplier * (rho^{|i-j|^1/2})
    scaled_power_corr  C (rho^{|i-j|^1/2}) C, C_ii = (0.5 + i/(p+1))^1/2
    spiked_block       diag(p^e1, p^e2, ...) (+) multiplier * power_corr on the rest
    """

    kind: str = "identity"
    rho: float = 0.3
    multiplier: float = 1.0
    spike_exponents: tuple[float, ...] = (2 / 3, 1 / 2)
    matrix: np.ndarray | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in COV_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "custom" and self.matrix is None:
            raise ValueError("custom covariance needs a matrix")
        object.__setattr__(self, "spike_exponents", tuple(self.spike_exponents))

    @property
    def n_spikes(self) -> int:
        return len(self.spike_exponents) if self.kind == "spiked_block" else 0

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "rho": self.rho, "multiplier": self.multiplier}
        if self.kind == "spiked_block":
            d["spike_exponents"] = list(self.spike_exponents)
        if self.kind == "custom":
            d["matrix"] = np.asarray(self.matrix).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CovSpec:
        d = dict(d)
        if "matrix" in d:
            d["matrix"] = np.asarray(d["matrix"], dtype=float)
        if "spike_exponents" in d:
            d["spike_exponents"] = tuple(float(e) for e in d["spike_exponents"])
        return cls(**d)


def power_corr(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.sqrt(np.abs(idx[:, None] - idx[None, :]))


def _build(spec: CovSpec, p: int) -> np.ndarray:
    if spec.kind == "identity":
        return spec.multiplier * np.eye(p)
    if spec.kind == "power_corr":
        return spec.multiplier * power_corr(p, spec.rho)
    if spec.kind == "scaled_power_corr":
        c = np.sqrt(0.5 + np.arange(1, p + 1) / (p + 1))
        return spec.multiplier * c[:, None] * power_corr(p, spec.rho) * c[None, :]
    if spec.kind == "spiked_block":
        k = spec.n_spikes
        if p <= k:
            raise BadDimension(f"spiked_block needs p > {k}, got {p}")
        out = np.zeros((p, p))
        out[:k, :k] = np.diag([float(p) ** e for e in spec.spike_exponents])
        out[k:, k:] = spec.multiplier * power_corr(p - k, spec.rho)
        return out
    m = np.asarray(spec.matrix, dtype=float)
    if m.shape != (p, p):
        raise BadDimension(f"custom covariance is {m.shape}, expected ({p}, {p})")
    return (m + m.T) / 2


def build_cov(spec: CovSpec, p: int) -> PsdMatrix:
    if p < 2:
        raise BadDimension(f"p must be >= 2, got {p}")
    m = _build(spec, p)
    if p <= 2048 and np.linalg.eigvalsh(m)[0] <= 0:
        raise BadDimension(f"{spec.kind} covariance is not positive definite at p={p}")
    return PsdMatrix.from_dense(m)


@dataclass(frozen=True)
class MeanPattern:
    """Mean vector: ``value`` on the first/last ``count`` coordinates.

    first_last puts +value on the first ``count`` and -value on the last.
    """

    kind: str = "zero"
    count: int = 0
    value: float = 1.0

    def vector(self, p: int) -> np.ndarray:
        mu = np.zeros(p)
        if self.kind == "zero" or self.count == 0:
            return mu
        if self.count > p:
            raise BadDimension(f"mean pattern touches {self.count} > p={p} coordinates")
        if self.kind == "first":
            mu[: self.count] = self.value
        elif self.kind == "last":
            mu[p - self.count:] = self.value
        elif self.kind == "first_last":
            if 2 * self.count > p:
                raise BadDimension("first_last pattern overlaps")
            mu[: self.count] = self.value
            mu[p - self.count:] = -self.value
        else:
            raise ValueError(f"unknown mean pattern {self.kind!r}")
        return mu

    def to_dict(self) -> dict:
        return {"kind": self.kind, "count": self.count, "value": self.value}


@dataclass(frozen=True)
class DistSpec:
    family: str = "gaussian"
    cov: CovSpec = CovSpec()
    df: float | None = None
    shape: float = 0.0  # skew shape vector is shape * 1
    mean: MeanPattern = MeanPattern()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BadFamilyParams(f"unknown family {self.family!r}")
        if self.family in ("mvt", "skew_t"):
            if self.df is None or self.df < 5:
                raise BadFamilyParams(f"{self.family} needs df >= 5, got {self.df}")
        if self.family in ("skew_normal", "skew_t") and self.cov.kind not in ("power_corr", "spiked_block"):
            raise BadFamilyParams("skew families need a power_corr or spiked_block scale matrix")

    @property
    def skewed(self) -> bool:
        return self.family in ("skew_normal", "skew_t")

    def to_dict(self) -> dict:
        d = {"family": self.family, "cov": self.cov.to_dict(), "mean": self.mean.to_dict()}
        if self.df is not None:
            d["df"] = self.df
        if self.skewed:
            d["shape"] = self.shape
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DistSpec:
        d = dict(d)
        if "cov" in d:
            d["cov"] = CovSpec.from_dict(d["cov"])
        if "mean" in d:
            d["mean"] = MeanPattern(**d["mean"])
        return cls(**d)


# ------------------------------------------------------------ skew families

def _skew_parts(spec: DistSpec, q: int):
    """(Omega, delta, mean of the raw draw, raw covariance) for the skew block."""
    omega = power_corr(q, spec.cov.rho)
    alpha = np.full(q, float(spec.shape))
    oa = omega @ alpha
    delta = oa / np.sqrt(1.0 + alpha @ oa)
    if spec.family == "skew_normal":
        mean = sqrt(2.0 / pi) * delta
        cov = omega - np.outer(mean, mean)
    else:
        nu = float(spec.df)
        mean = sqrt(nu / pi) * gamma(nu / 2 - 0.5) / gamma(nu / 2) * delta
        cov = nu / (nu - 2.0) * omega - np.outer(mean, mean)
    return omega, delta, mean, cov


def population_cov(spec: DistSpec, p: int) -> np.ndarray:
    """Covariance realized by ``draw_sample`` for this design."""
    if not spec.skewed:
        return build_cov(spec.cov, p).entries
    k = spec.cov.n_spikes
    if p <= k + 1:
        raise BadDimension(f"p={p} too small for the skew design")
    out = np.zeros((p, p))
    if k:
        out[:k, :k] = np.diag([float(p) ** e for e in spec.cov.spike_exponents])
    out[k:, k:] = spec.cov.multiplier * _skew_parts(spec, p - k)[3]
    return out


class Sampler:
    """Draws (p, n) samples from one design; precomputes square roots once."""

    def __init__(self, spec: DistSpec, p: int):
        self.spec = spec
        self.p = p
        self.mu = spec.mean.vector(p)
        if spec.skewed:
            k = spec.cov.n_spikes
            self.k = k
            self.spike_sd = np.sqrt([float(p) ** e for e in spec.cov.spike_exponents[:k]])
            omega, delta, mean, _ = _skew_parts(spec, p - k)
            self.delta = delta
            self.skew_mean = mean
            self.skew_root = sqrt_psd(omega - np.outer(delta, delta))
        else:
            self.root = sqrt_psd(build_cov(spec.cov, p).entries)

    def standardized(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """w with mean zero and identity covariance (non-skew families)."""
        fam, p = self.spec.family, self.p
        if fam == "gaussian":
            return rng.standard_normal((p, n))
        if fam == "mvt":
            nu = float(self.spec.df)
            y = rng.standard_normal((p, n))
            q = rng.chisquare(nu, size=n)
            return y * np.sqrt((nu - 2.0) / q)[None, :]
        if fam == "chisq_marginal":
            return (rng.chisquare(5.0, size=(p, n)) - 5.0) / sqrt(10.0)
        raise BadFamilyParams(f"{fam} has no standardized representation")

    def centered(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Mean-zero draw with covariance ``population_cov``."""
        if not self.spec.skewed:
            return self.root @ self.standardized(n, rng)
        k, q = self.k, self.p - self.k
        top = self.spike_sd[:, None] * rng.standard_normal((k, n)) if k else None
        u0 = np.abs(rng.standard_normal(n))
        body = self.delta[:, None] * u0[None, :] + self.skew_root @ rng.standard_normal((q, n))
        if self.spec.family == "skew_t":
            nu = float(self.spec.df)
            body = body / np.sqrt(rng.chisquare(nu, size=n) / nu)[None, :]
        body = np.sqrt(self.spec.cov.multiplier) * (body - self.skew_mean[:, None])
        return np.vstack([top, body]) if k else body

    def draw(self, n: int, rng: np.random.Generator, mu=None) -> Sample:
        x = self.centered(n, rng)
        return Sample(x + (self.mu if mu is None else np.asarray(mu))[:, None])


def draw_sample(spec: DistSpec, p: int, n: int, rng) -> Sample:
    if n < 1:
        raise BadDimension("n must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = seeded_stream(int(rng), 0)
    return Sampler(spec, p).draw(n, rng)


def seeded_stream(seed: int, replication_index: int, *subkeys: int) -> np.random.Generator:
    """Independent generator for one replication (and optional sub-stream)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replication_index), *map(int, subkeys)))
    return np.random.Generator(np.random.PCG64(ss))

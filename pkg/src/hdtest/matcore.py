"""Dense matrix primitives, sample summaries and dual eigendecompositions.

Data matrices are stored variables-by-observations (p x n).  Every
eigenvector of the p x p sample covariance is obtained through the
n x n dual covariance, so nothing here ever forms a p x p matrix unless a
caller explicitly asks for ``SampleSummary.cov`` or ``PsdMatrix.entries``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateEigenvalue,
    DimensionMismatch,
    EigenFailure,
    NonFiniteData,
    TooFewObservations,
)

# eigenvalues below ZERO_TOL * largest are treated as exact zeros
ZERO_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Sample:
    """One population's observations, shape (p, n)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatch(f"expected a (p, n) matrix, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteData("sample contains NaN or infinite entries")
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_observations(cls, rows) -> Sample:
        """Build from an (n, p) array with one observation per row."""
        return cls(np.asarray(rows, dtype=float).T)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @cached_property
    def mean(self) -> np.ndarray:
        return self.data.mean(axis=1)

    @cached_property
    def summary(self) -> SampleSummary:
        return summarize(self)

    @cached_property
    def gram(self) -> np.ndarray:
        """Raw inner products X^T X (n x n)."""
        return self.data.T @ self.data

    def require(self, n_min: int) -> None:
        if self.n < n_min:
            raise TooFewObservations(f"need at least {n_min} observations, got {self.n}")

    def shifted(self, mu) -> Sample:
        return Sample(self.data + np.asarray(mu, dtype=float)[:, None])


@dataclass(frozen=True)
class DualEigen:
    """Eigenpairs of the dual covariance, descending, j = 1..n-1."""

    values: np.ndarray  # (n-1,)
    vectors: np.ndarray  # (n, n-1), columns are u_j


@dataclass(frozen=True, eq=False)
class SampleSummary:
    mean: np.ndarray
    centered: np.ndarray  # X - Xbar, (p, n)
    dual_cov: np.ndarray  # (n, n)
    trace_cov: float

    @property
    def p(self) -> int:
        return self.centered.shape[0]

    @property
    def n(self) -> int:
        return self.centered.shape[1]

    @cached_property
    def cov(self) -> np.ndarray:
        c = self.centered @ self.centered.T / (self.n - 1)
        return (c + c.T) / 2

    @cached_property
    def eigen(self) -> DualEigen:
        return dual_eigen(self)

    @cached_property
    def diag_cov(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.centered, self.centered) / (self.n - 1)


def summarize(sample: Sample) -> SampleSummary:
    sample.require(2)
    n = sample.n
    centered = sample.data - sample.mean[:, None]
    dual = centered.T @ centered / (n - 1)
    dual = (dual + dual.T) / 2
    return SampleSummary(
        mean=sample.mean,
        centered=_frozen(centered),
        dual_cov=_frozen(dual),
        trace_cov=float(np.trace(dual)),
    )


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def dual_eigen(summary: SampleSummary) -> DualEigen:
    n = summary.n
    if n < 2:
        raise TooFewObservations("need at least 2 observations")
    try:
        vals, vecs = np.linalg.eigh(summary.dual_cov)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenFailure(str(exc)) from exc
    order = np.argsort(vals)[::-1][: n - 1]
    vals = vals[order]
    vecs = _fix_signs(vecs[:, order])
    top = max(vals[0], 0.0)
    vals = np.where(vals <= ZERO_TOL * top, 0.0, vals)
    return DualEigen(values=_frozen(vals), vectors=_frozen(vecs))


def full_eigenvector(summary: SampleSummary, j: int) -> np.ndarray:
    """Unit eigenvector h_j of S_n (1-based j) recovered from the dual."""
    eig = summary.eigen
    if not 1 <= j <= len(eig.values):
        raise DegenerateEigenvalue(f"eigen index {j} out of range 1..{len(eig.values)}")
    lam = eig.values[j - 1]
    if lam <= ZERO_TOL * eig.values[0] or lam <= 0:
        raise DegenerateEigenvalue(f"eigenvalue {j} is zero")
    h = summary.centered @ eig.vectors[:, j - 1] / np.sqrt((summary.n - 1) * lam)
    return h


def full_eigenvectors(summary: SampleSummary, k: int) -> np.ndarray:
    """First k unit eigenvectors as columns of a (p, k) matrix."""
    if k == 0:
        return np.zeros((summary.p, 0))
    return np.column_stack([full_eigenvector(summary, j) for j in range(1, k + 1)])


def sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix via eigh."""
    m = np.asarray(m, dtype=float)
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


@dataclass(frozen=True, eq=False)
class PsdMatrix:
    """A positive-semidefinite weight matrix in one of four storage forms.

    ``projection`` stores an orthonormal basis V and represents I - V V^T.
    """

    form: str
    p: int
    diag: np.ndarray | None = None
    dense: np.ndarray | None = None
    basis: np.ndarray | None = field(default=None)

    @classmethod
    def identity(cls, p: int) -> PsdMatrix:
        return cls("identity", int(p))

    @classmethod
    def diagonal(cls, d) -> PsdMatrix:
        d = _frozen(np.ravel(d))
        return cls("diagonal", d.size, diag=d)

    @classmethod
    def from_dense(cls, m) -> PsdMatrix:
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"weight matrix must be square, got {m.shape}")
        return cls("dense", m.shape[0], dense=_frozen((m + m.T) / 2))

    @classmethod
    def projection_out(cls, v) -> PsdMatrix:
        """I - V V^T for a (p, k) matrix V with orthonormal columns."""
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        return cls("projection", v.shape[0], basis=_frozen(v))

    @cached_property
    def entries(self) -> np.ndarray:
        if self.form == "identity":
            return np.eye(self.p)
        if self.form == "diagonal":
            return np.diag(self.diag)
        if self.form == "projection":
            return np.eye(self.p) - self.basis @ self.basis.T
        return self.dense

    def apply(self, y: np.ndarray) -> np.ndarray:
        """A @ y for a vector or (p, m) matrix."""
        if self.form == "identity":
            return y
        if self.form == "diagonal":
            return self.diag[:, None] * y if y.ndim == 2 else self.diag * y
        if self.form == "projection":
            return y - self.basis @ (self.basis.T @ y)
        return self.dense @ y

    def gram(self, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
        """x^T A y without forming A when the form allows it."""
        if y is None:
            y = x
        if x.shape[0] != self.p or y.shape[0] != self.p:
            raise DimensionMismatch(f"weight matrix is {self.p}-dimensional, data is {x.shape[0]}")
        if self.form == "identity":
            return x.T @ y
        if self.form == "projection":
            return x.T @ y - (x.T @ self.basis) @ (self.basis.T @ y)
        return x.T @ self.apply(y)

    def sqrt(self) -> PsdMatrix:
        if self.form in ("identity", "projection"):
            return self
        if self.form == "diagonal":
            return PsdMatrix.diagonal(np.sqrt(np.clip(self.diag, 0.0, None)))
        return PsdMatrix.from_dense(sqrt_psd(self.dense))

    def is_zero(self) -> bool:
        if self.form == "diagonal":
            return not np.any(self.diag)
        if self.form == "dense":
            return not np.any(self.dense)
        return False


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path) -> Sample:
    """Read one-observation-per-row CSV (optional header) as a Sample."""
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise TooFewObservations(f"{path}: no data rows")
    if not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    width = len(rows[0]) if rows else 0
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DimensionMismatch(f"{path}: row {i + 1} has {len(r)} fields, expected {width}")
    try:
        arr = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise NonFiniteData(f"{path}: {exc}") from exc
    if arr.size == 0:
        raise TooFewObservations(f"{path}: no data rows")
    return Sample.from_observations(arr)

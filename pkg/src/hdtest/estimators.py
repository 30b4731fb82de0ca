"""U-statistic and spectral estimators for one sample.

W_n(A) is unbiased for tr((A^1/2 Sigma A^1/2)^2).  The noise-reduced (NR)
eigenvalues and vectors correct the upward bias of sample eigenvalues in
the p >> n regime, and the cross-data-matrix (CDM) singular values give
tail energies Psi_(j) = sum_{l >= j} lambda_l^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, perm

import numpy as np

from .errors import DegenerateEigenvalue, DimensionMismatch, TooFewObservations
from .matcore import PsdMatrix, Sample, SampleSummary, full_eigenvectors


@dataclass(frozen=True)
class TraceSquareEstimate:
    value: float
    n_used: int

    def __float__(self) -> float:
        return self.value


def _w_from_gram(b: np.ndarray) -> float:
    # Inclusion-exclusion over distinct index tuples of the off-diagonal Gram.
    n = b.shape[0]
    b0 = b - np.diag(np.diag(b))
    r = b0.sum(axis=1)
    s = r.sum()
    q = float(np.sum(b0 * b0))
    rr = float(r @ r)
    return (
        q / perm(n, 2)
        - 2.0 * (rr - q) / perm(n, 3)
        + (s * s - 4.0 * rr + 2.0 * q) / perm(n, 4)
    )


def w_stat(sample: Sample, a: PsdMatrix | None = None) -> TraceSquareEstimate:
    """Unbiased estimate of tr(Sigma_A^2).

    The estimator is translation invariant, so it is evaluated on the
    centered data to avoid cancellation when the mean is large.
    """
    if sample.n < 4:
        raise TooFewObservations(f"W_n needs n >= 4, got {sample.n}")
    summary = sample.summary
    if a is None or a.form == "identity":
        b = summary.dual_cov * (sample.n - 1)
    else:
        b = a.gram(summary.centered)
    return TraceSquareEstimate(float(_w_from_gram(b)), sample.n)


def cross_trace(s1: Sample, s2: Sample, a1: PsdMatrix | None = None,
                a2: PsdMatrix | None = None) -> float:
    """tr(S_1 A_1 S_2 A_2) computed from n1 x n2 cross Gram matrices."""
    if s1.p != s2.p:
        raise DimensionMismatch(f"samples have p={s1.p} and p={s2.p}")
    c1, c2 = s1.summary.centered, s2.summary.centered
    scale = (s1.n - 1) * (s2.n - 1)
    g1 = c1.T @ c2 if a1 is None else a1.gram(c1, c2)
    if a2 is None and a1 is None:
        return float(np.sum(g1 * g1)) / scale
    g2 = c1.T @ c2 if a2 is None else a2.gram(c1, c2)
    return float(np.sum(g1 * g2)) / scale


def k1_hat(s1: Sample, s2: Sample, a: PsdMatrix | None = None) -> float:
    """Plug-in estimate of the null variance K_1(A) of T(A).  May be negative."""
    if a is not None and a.is_zero():
        return 0.0
    n1, n2 = s1.n, s2.n
    w1 = w_stat(s1, a).value
    w2 = w_stat(s2, a).value
    return (2.0 * (w1 / (n1 * (n1 - 1)) + w2 / (n2 * (n2 - 1)))
            + 4.0 * cross_trace(s1, s2, a, a) / (n1 * n2))


def nr_eigenvalues(summary: SampleSummary) -> np.ndarray:
    """Noise-reduced eigenvalues lambda~_j, j = 1..n-2."""
    n = summary.n
    if n < 3:
        raise TooFewObservations(f"NR eigenvalues need n >= 3, got {n}")
    return nr_from_spectrum(summary.eigen.values, summary.trace_cov, n)


def nr_from_spectrum(lam, trace: float, n: int) -> np.ndarray:
    """NR correction applied to descending dual eigenvalues ``lam``."""
    lam = np.asarray(lam, dtype=float)
    j = np.arange(1, n - 1)
    resid = trace - np.cumsum(lam)[: n - 2]
    tilde = lam[: n - 2] - np.clip(resid, 0.0, None) / (n - 1 - j)
    return np.clip(tilde, 0.0, None)


def _check_k(summary: SampleSummary, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return np.zeros(0)
    if summary.n < 4 or k > summary.n - 2:
        raise DegenerateEigenvalue(f"k={k} exceeds n-2={summary.n - 2}")
    tilde = nr_eigenvalues(summary)[:k]
    bad = np.flatnonzero(tilde <= 0)
    if bad.size:
        raise DegenerateEigenvalue(f"NR eigenvalue {bad[0] + 1} is zero")
    return tilde


def nr_eigenvectors(summary: SampleSummary, k: int) -> np.ndarray:
    """NR direction vectors h~_1..h~_k as columns; not unit vectors."""
    tilde = _check_k(summary, k)
    u = summary.eigen.vectors[:, :k]
    return summary.centered @ u / np.sqrt((summary.n - 1) * tilde)


def leave_one_vectors(summary: SampleSummary, j: int) -> np.ndarray:
    """All h~_{jl}, l = 1..n, as the columns of a (p, n) matrix (1-based j)."""
    tilde = _check_k(summary, j)[j - 1]
    n = summary.n
    u = summary.eigen.vectors[:, j - 1]
    c_n = np.sqrt(n - 1) / (n - 2)
    u_l = np.repeat(u[:, None], n, axis=1)
    u_l[np.arange(n), np.arange(n)] = -u / (n - 1)
    return c_n * summary.centered @ u_l / np.sqrt(tilde)


def nr_scores(sample: Sample, k: int) -> np.ndarray:
    """Bias-reduced scores x~_{jl} = h~_{jl}^T x_l, shape (k, n).

    Uses (X - Xbar) u_jl = (X - Xbar) u_j - n/(n-1) u_jl (x_l - xbar), so
    only n x n products of the data are needed.
    """
    summary = sample.summary
    tilde = _check_k(summary, k)
    n = sample.n
    if k == 0:
        return np.zeros((0, n))
    if n < 4:
        raise TooFewObservations(f"scores need n >= 4, got {n}")
    g = sample.gram
    cg = g - g.mean(axis=0)[None, :]  # (X - Xbar)^T X
    u = summary.eigen.vectors[:, :k]
    c_n = np.sqrt(n - 1) / (n - 2)
    raw = u.T @ cg - (n / (n - 1)) * u.T * np.diag(cg)[None, :]
    return c_n * raw / np.sqrt(tilde)[:, None]


@dataclass(frozen=True)
class CDMEstimate:
    singular_values: np.ndarray  # lambda-acute_j, j = 1..n(2)-1
    psi: np.ndarray  # Psi-hat_(j), j = 1..n(2)
    n_first: int
    n_second: int

    @property
    def tau(self) -> np.ndarray:
        """tau-hat_(j) = Psi_(j+1) / Psi_(j), j = 1..n(2)-1 (nan where Psi_(j) = 0)."""
        num, den = self.psi[1:], self.psi[:-1]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def cdm_estimates(sample: Sample) -> CDMEstimate:
    """Cross-data-matrix singular values and tail energies.

    The split is the deterministic first-half / second-half partition, so
    the result depends on observation order.
    """
    cached = sample.__dict__.get("_cdm")
    if cached is not None:
        return cached
    n = sample.n
    if n < 6:
        raise TooFewObservations(f"CDM estimates need n >= 6, got {n}")
    n1 = ceil(n / 2)
    n2 = n - n1
    x1 = sample.data[:, :n1]
    x2 = sample.data[:, n1:]
    x1 = x1 - x1.mean(axis=1, keepdims=True)
    x2 = x2 - x2.mean(axis=1, keepdims=True)
    sd1 = (x1.T @ x2) / np.sqrt((n1 - 1) * (n2 - 1))
    sv = np.linalg.svd(sd1, compute_uv=False)[: n2 - 1]
    if sv.size and sv[0] > 0:
        sv = np.where(sv <= 1e-12 * sv[0], 0.0, sv)
    else:
        sv = np.zeros(n2 - 1)
    # tail sums; the n(2)-th singular value is structurally zero
    psi = np.append(np.cumsum((sv * sv)[::-1])[::-1], 0.0)
    out = CDMEstimate(singular_values=sv, psi=psi, n_first=n1, n_second=n2)
    sample.__dict__["_cdm"] = out
    return out


@dataclass(frozen=True)
class SpectralEstimate:
    lam_hat: np.ndarray
    lam_tilde: np.ndarray
    lam_cdm: np.ndarray
    h_tilde: np.ndarray  # (p, k)
    h_hat: np.ndarray  # (p, k)
    scores: np.ndarray  # (k, n)
    psi_hat: np.ndarray
    c_n: float

    @property
    def k(self) -> int:
        return self.h_tilde.shape[1]


def spectral_estimate(sample: Sample, k: int) -> SpectralEstimate:
    summary = sample.summary
    cdm = cdm_estimates(sample)
    n = sample.n
    return SpectralEstimate(
        lam_hat=summary.eigen.values,
        lam_tilde=nr_eigenvalues(summary),
        lam_cdm=cdm.singular_values,
        h_tilde=nr_eigenvectors(summary, k),
        h_hat=full_eigenvectors(summary, k),
        scores=nr_scores(sample, k),
        psi_hat=cdm.psi,
        c_n=np.sqrt(n - 1) / (n - 2),
    )

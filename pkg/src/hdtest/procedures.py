"""Two-sample mean test procedures and their asymptotic power.

Procedures
----------
normal_A      T(A) / K1hat(A)^1/2 > z_alpha, for a chosen weight matrix A
chi2_sse      (2 / K1hat(I))^1/2 T(I) + 1 > chi2_1(alpha)
sse_adjusted  spike-projected statistic with NR scores, / K1hat*^1/2 > z_alpha
naive_sse     plug-in projection T(Ahat_1, Ahat_2) / K1hat*^1/2 > z_alpha
adaptive      picks normal_A(I) or sse_adjusted from the data
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, stats

from .errors import (
    DegenerateDiagonal,
    DimensionMismatch,
    NonPositiveVariance,
    OracleRequired,
)
from .estimators import (
    cdm_estimates,
    cross_trace,
    k1_hat,
    nr_eigenvectors,
    nr_scores,
    w_stat,
)
from .matcore import PsdMatrix, Sample, full_eigenvectors
from .modelcheck import KappaFn, kappa, select_k, sse_check

# guard for the square root of a non-positive variance estimate
VAR_FLOOR = 1e-300

CHI2_CAVEAT = "assumes |h11^T h21| ~ 1 (leading eigenvectors aligned); not checked"
SSE_CAVEAT = "assumes the projected mean difference is negligible under H0; not testable"


def z_crit(alpha: float) -> float:
    return float(stats.norm.isf(alpha))


def chi2_crit(alpha: float) -> float:
    return float(stats.chi2.isf(alpha, 1))


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")


def _check_pair(s1: Sample, s2: Sample, n_min: int) -> None:
    if s1.p != s2.p:
        raise DimensionMismatch(f"samples have p={s1.p} and p={s2.p}")
    s1.require(n_min)
    s2.require(n_min)


@dataclass
class TestOutcome:
    __test__ = False

    statistic: float
    standardizer: float
    score: float
    critical: float
    reject: bool
    p_value: float
    procedure: str
    alpha: float
    degenerate: bool = False
    route: str | None = None
    k: tuple[int, int] | None = None
    caveats: list[str] = field(default_factory=list)
    diagnosis: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("statistic", "standardizer", "score", "p_value"):
            if not np.isfinite(d[key]):
                d[key] = None
        if d["k"] is not None:
            d["k"] = list(d["k"])
        return d


def _normal_outcome(stat, var, alpha, procedure, **extra) -> TestOutcome:
    degenerate = not var > 0
    sd = float(np.sqrt(max(var, VAR_FLOOR)))
    score = stat / sd
    crit = z_crit(alpha)
    reject = bool(stat > 0) if degenerate else bool(score > crit)
    return TestOutcome(
        statistic=float(stat), standardizer=sd, score=float(score), critical=crit,
        reject=reject, p_value=float(stats.norm.sf(score)), procedure=procedure,
        alpha=alpha, degenerate=degenerate, **extra,
    )


# ---------------------------------------------------------------- statistics

def _within(sample: Sample, a: PsdMatrix | None) -> float:
    """sum_{j<j'} x_j^T A x_j'."""
    g = sample.gram if a is None or a.form == "identity" else a.gram(sample.data)
    return (g.sum() - np.trace(g)) / 2.0


def t_stat(s1: Sample, s2: Sample, a: PsdMatrix | None = None) -> float:
    """Pairwise (U-statistic) form of T(A)."""
    return t_stat_pair(s1, s2, a, a)


def t_stat_pair(s1: Sample, s2: Sample, a1: PsdMatrix | None,
                a2: PsdMatrix | None) -> float:
    """T(A_1, A_2); the cross term uses A_1^1/2 A_2^1/2."""
    _check_pair(s1, s2, 2)
    n1, n2 = s1.n, s2.n
    within = 2.0 * (_within(s1, a1) / (n1 * (n1 - 1)) + _within(s2, a2) / (n2 * (n2 - 1)))
    m1, m2 = s1.mean, s2.mean
    if a1 is a2:
        cross = m1 @ (m2 if a1 is None else a1.apply(m2))
    else:
        r1 = m1 if a1 is None else a1.sqrt().apply(m1)
        r2 = m2 if a2 is None else a2.sqrt().apply(m2)
        cross = r1 @ r2
    return float(within - 2.0 * cross)


def t_stat_first_form(s1: Sample, s2: Sample, a: PsdMatrix | None = None) -> float:
    """(xbar1 - xbar2)^T A (xbar1 - xbar2) - sum_i tr(S_i A) / n_i."""
    _check_pair(s1, s2, 2)
    a = a or PsdMatrix.identity(s1.p)
    d = s1.mean - s2.mean
    out = d @ a.apply(d)
    for s in (s1, s2):
        out -= np.trace(a.gram(s.summary.centered)) / ((s.n - 1) * s.n)
    return float(out)


def sse_stat(s1: Sample, s2: Sample, k1: int, k2: int) -> float:
    """Estimated spike-projected statistic built from NR scores and vectors."""
    _check_pair(s1, s2, 4)
    within, resid_sums = [], []
    for s, k in ((s1, k1), (s2, k2)):
        g = s.gram
        sc = nr_scores(s, k)
        gs = sc.T @ sc
        off = (g.sum() - np.trace(g)) - (gs.sum() - np.trace(gs))
        within.append(off / 2.0 / (s.n * (s.n - 1)))
        total = s.data.sum(axis=1)
        if k:
            total = total - nr_eigenvectors(s.summary, k) @ sc.sum(axis=1)
        resid_sums.append(total)
    cross = resid_sums[0] @ resid_sums[1] / (s1.n * s2.n)
    return float(2.0 * sum(within) - 2.0 * cross)


def _proj(sample: Sample, k: int) -> PsdMatrix | None:
    if k == 0:
        return None
    return PsdMatrix.projection_out(full_eigenvectors(sample.summary, k))


def _tail_energy(sample: Sample, k: int) -> float:
    # k = 0 falls back to W_n(I) so the statistics reduce to the A = I test
    if k == 0:
        return w_stat(sample).value
    return float(cdm_estimates(sample).psi[k])


def k1_star_hat(s1: Sample, s2: Sample, k1: int, k2: int) -> float:
    """Variance estimate for the spike-projected statistics.

    Tail energies Psi_(k+1) come from the cross-data-matrix estimate.
    """
    n1, n2 = s1.n, s2.n
    tr = cross_trace(s1, s2, _proj(s1, k1), _proj(s2, k2))
    return (2.0 * (_tail_energy(s1, k1) / (n1 * (n1 - 1)) + _tail_energy(s2, k2) / (n2 * (n2 - 1)))
            + 4.0 * tr / (n1 * n2))


# ------------------------------------------------------------ matrix choice

@dataclass(frozen=True)
class MatrixChoice:
    """Which weight matrix A to use in the normal_A test.

    The a_star variants need the true covariances and exist for
    simulation studies only.
    """

    tag: str = "identity"
    sigma1: np.ndarray | None = None
    sigma2: np.ndarray | None = None
    custom: PsdMatrix | None = None

    TAGS = ("identity", "a_star_oracle", "a_star_diag_oracle", "a_star_diag_estimated", "custom")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown matrix choice {self.tag!r}")

    def resolve(self, s1: Sample, s2: Sample) -> PsdMatrix:
        n1, n2, p = s1.n, s2.n, s1.p
        if self.tag == "identity":
            return PsdMatrix.identity(p)
        if self.tag == "custom":
            if self.custom is None:
                raise ValueError("custom choice needs a matrix")
            return self.custom
        if self.tag == "a_star_diag_estimated":
            return a_star_diag(s1.summary.diag_cov, s2.summary.diag_cov, n1, n2)
        if self.sigma1 is None or self.sigma2 is None:
            raise OracleRequired(f"{self.tag} needs the population covariances")
        if self.tag == "a_star_oracle":
            return a_star(self.sigma1, self.sigma2, n1, n2)
        return a_star_diag(np.diag(self.sigma1), np.diag(self.sigma2), n1, n2)


def c_star(n1: int, n2: int) -> float:
    return 1.0 / n1 + 1.0 / n2


def a_star(sigma1, sigma2, n1: int, n2: int) -> PsdMatrix:
    """c* (Sigma_1/n1 + Sigma_2/n2)^-1 by a positive-definite solve."""
    m = np.asarray(sigma1) / n1 + np.asarray(sigma2) / n2
    inv = linalg.solve(m, np.eye(m.shape[0]), assume_a="pos")
    return PsdMatrix.from_dense(c_star(n1, n2) * inv)


def a_star_diag(d1, d2, n1: int, n2: int) -> PsdMatrix:
    d = np.asarray(d1) / n1 + np.asarray(d2) / n2
    if d.max() <= 0 or np.any(d <= 1e-12 * d.max()):
        raise DegenerateDiagonal("a diagonal variance is zero; diagonal weighting undefined")
    return PsdMatrix.diagonal(c_star(n1, n2) / d)


# ---------------------------------------------------------------- procedures

def test_normal(s1: Sample, s2: Sample, choice: MatrixChoice | None = None,
                alpha: float = 0.05, a: PsdMatrix | None = None) -> TestOutcome:
    """Reject when T(A) / K1hat(A)^1/2 > z_alpha.  ``a`` overrides ``choice``."""
    _check_alpha(alpha)
    _check_pair(s1, s2, 4)
    if a is None:
        a = (choice or MatrixChoice()).resolve(s1, s2)
    stat = t_stat(s1, s2, a)
    var = k1_hat(s1, s2, a)
    return _normal_outcome(stat, var, alpha, "normal_A")


def test_chi2(s1: Sample, s2: Sample, alpha: float = 0.05) -> TestOutcome:
    _check_alpha(alpha)
    _check_pair(s1, s2, 4)
    stat = t_stat(s1, s2)
    var = k1_hat(s1, s2)
    degenerate = not var > 0
    sd = float(np.sqrt(max(var, VAR_FLOOR)))
    score = np.sqrt(2.0) * stat / sd + 1.0
    crit = chi2_crit(alpha)
    p_value = float(stats.chi2.sf(score, 1)) if score > 0 else 1.0
    reject = bool(stat > 0) if degenerate else bool(score > crit)
    return TestOutcome(
        statistic=stat, standardizer=sd, score=float(score), critical=crit, reject=reject,
        p_value=p_value, procedure="chi2_sse", alpha=alpha, degenerate=degenerate,
        caveats=[CHI2_CAVEAT],
    )


def test_sse(s1: Sample, s2: Sample, k1: int, k2: int, alpha: float = 0.05) -> TestOutcome:
    _check_alpha(alpha)
    _check_pair(s1, s2, 4)
    stat = sse_stat(s1, s2, k1, k2)
    var = k1_star_hat(s1, s2, k1, k2)
    return _normal_outcome(stat, var, alpha, "sse_adjusted", k=(k1, k2), caveats=[SSE_CAVEAT])


def test_naive(s1: Sample, s2: Sample, k1: int, k2: int, alpha: float = 0.05) -> TestOutcome:
    """Plug-in projection statistic; kept to show its size inflation."""
    _check_alpha(alpha)
    _check_pair(s1, s2, 4)
    stat = t_stat_pair(s1, s2, _proj(s1, k1), _proj(s2, k2))
    var = k1_star_hat(s1, s2, k1, k2)
    return _normal_outcome(stat, var, alpha, "naive_sse", k=(k1, k2))


def test_adaptive(s1: Sample, s2: Sample, alpha: float = 0.05,
                  kappa_fn: KappaFn = kappa) -> TestOutcome:
    """Route to normal_A(I) under NSSE, otherwise to sse_adjusted with selected k."""
    _check_alpha(alpha)
    _check_pair(s1, s2, 6)
    diag = sse_check(s1, s2, kappa_fn)
    if diag.sse:
        diag.k_hat = (select_k(s1, kappa_fn), select_k(s2, kappa_fn))
    if not diag.sse or diag.k_hat == (0, 0):
        out = test_normal(s1, s2, alpha=alpha)
        out.k = (0, 0)
    else:
        out = test_sse(s1, s2, *diag.k_hat, alpha=alpha)
    out.route = out.procedure
    out.procedure = "adaptive"
    out.diagnosis = diag.to_dict()
    return out


# ------------------------------------------------------ asymptotic power

def asymptotic_power(delta: float, k1: float, k2: float, alpha: float = 0.05) -> float:
    """Phi(delta / K^1/2 - z_alpha (K1 / K)^1/2) with K = K1 + K2."""
    if k1 < 0 or k2 < 0 or k1 + k2 <= 0:
        raise NonPositiveVariance(f"need K1, K2 >= 0 and K1 + K2 > 0, got {k1}, {k2}")
    k = k1 + k2
    return float(stats.norm.cdf(delta / np.sqrt(k) - z_crit(alpha) * np.sqrt(k1 / k)))


def power_null_variance(delta: float, k1: float, alpha: float = 0.05) -> float:
    """Regime where K1 dominates: Phi(delta / K1^1/2 - z_alpha)."""
    if k1 <= 0:
        raise NonPositiveVariance("K1 must be positive")
    return float(stats.norm.cdf(delta / np.sqrt(k1) - z_crit(alpha)))


def power_mean_variance(delta: float, k2: float) -> float:
    """Regime where K2 dominates: Phi(delta / K2^1/2)."""
    if k2 <= 0:
        raise NonPositiveVariance("K2 must be positive")
    return float(stats.norm.cdf(delta / np.sqrt(k2)))


def power_consistent() -> float:
    """Regime where K1 / delta^2 -> 0: power tends to one."""
    return 1.0


@dataclass(frozen=True)
class PopulationMoments:
    delta: float
    k1: float
    k2: float

    def power(self, alpha: float = 0.05) -> float:
        return asymptotic_power(self.delta, self.k1, self.k2, alpha)


def population_moments(sigma1, sigma2, mu1, mu2, n1: int, n2: int,
                       a=None) -> PopulationMoments:
    """Exact mean and variance components of T(A) for known parameters."""
    sigma1, sigma2 = np.asarray(sigma1), np.asarray(sigma2)
    a = np.eye(len(sigma1)) if a is None else (a.entries if isinstance(a, PsdMatrix) else np.asarray(a))
    d = np.asarray(mu1) - np.asarray(mu2)
    ad = a @ d
    sa1, sa2 = sigma1 @ a, sigma2 @ a
    k1 = (2.0 * (np.sum(sa1 * sa1.T) / (n1 * (n1 - 1)) + np.sum(sa2 * sa2.T) / (n2 * (n2 - 1)))
          + 4.0 * np.sum(sa1 * sa2.T) / (n1 * n2))
    k2 = 4.0 * (ad @ sigma1 @ ad / n1 + ad @ sigma2 @ ad / n2)
    return PopulationMoments(float(d @ ad), float(k1), float(k2))


def top_eigenvectors(sigma, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((len(sigma), 0))
    vals, vecs = np.linalg.eigh(sigma)
    return vecs[:, ::-1][:, :k]


def population_moments_star(sigma1, sigma2, mu1, mu2, n1: int, n2: int,
                            k1: int, k2: int) -> PopulationMoments:
    """Moments of the spike-projected statistic with true eigenvectors."""
    sigma1, sigma2 = np.asarray(sigma1), np.asarray(sigma2)
    p = len(sigma1)
    projs = []
    for s, k in ((sigma1, k1), (sigma2, k2)):
        h = top_eigenvectors(s, k)
        projs.append(np.eye(p) - h @ h.T)
    a1, a2 = projs
    mu_star = a1 @ np.asarray(mu1) - a2 @ np.asarray(mu2)
    s1s, s2s = a1 @ sigma1 @ a1, a2 @ sigma2 @ a2
    k1v = (2.0 * (np.sum(s1s * s1s) / (n1 * (n1 - 1)) + np.sum(s2s * s2s) / (n2 * (n2 - 1)))
           + 4.0 * np.sum(s1s * s2s) / (n1 * n2))
    k2v = 4.0 * (mu_star @ s1s @ mu_star / n1 + mu_star @ s2s @ mu_star / n2)
    return PopulationMoments(float(mu_star @ mu_star), float(k1v), float(k2v))

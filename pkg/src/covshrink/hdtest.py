"""One-sample mean tests and their power under local alternatives.

Three statistics share the form n xbar' M^-1 xbar and differ in M: the
sample covariance (classical test), the spectrally shrunk estimate
(decomposite test), or the true covariance (oracle, for calibration).
P-values always use the chi-square limit with p degrees of freedom; no
finite-sample F calibration is attempted.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc
from scipy.stats import chi2

from ._rng import gaussian_rows, replicate_rng
from .errors import CovshrinkError, NumericError
from .estimators import as_data_matrix, sample_covariance, tsai_eigenvalues
from .loss_risk import MAX_FAILURE_FRACTION
from .matrix_core import cholesky, spectral_decompose
from scipy.linalg import solve_triangular

TEST_METHODS = ("hotelling", "decomposite", "oracle")
RATES = ("hdim", "classical")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    pvalue: float
    method: str
    n: int
    p: int

    def __post_init__(self):
        if self.statistic < 0.0:
            raise ValueError("test statistic cannot be negative")
        if not 0.0 <= self.pvalue <= 1.0:
            raise ValueError("p-value outside [0, 1]")


def _quad_form(xbar: np.ndarray, matrix: np.ndarray) -> float:
    """xbar' matrix^-1 xbar through a Cholesky solve; raises on singular input."""
    t = cholesky(matrix)
    w = solve_triangular(t, xbar, lower=True)
    return float(w @ w)


def chisq_pvalue(statistic: float, p: int, noncentrality: float = 0.0) -> float:
    """Upper-tail probability of (non)central chi-square with p dof.

    Central case via the regularized upper incomplete gamma.  Noncentral case
    via the Poisson mixture series, truncated once the accumulated Poisson
    weight reaches 1 - 1e-8 (the tail contributes at most 1e-8 since each
    mixture term is a probability).
    """
    if statistic < 0.0:
        raise ValueError(f"statistic must be nonnegative, got {statistic}")
    if noncentrality < 0.0:
        raise ValueError("noncentrality must be nonnegative")
    if noncentrality == 0.0:
        return float(gammaincc(p / 2.0, statistic / 2.0))
    half = noncentrality / 2.0
    weight = math.exp(-half)
    total_weight = 0.0
    value = 0.0
    k = 0
    while total_weight < 1.0 - 1e-8:
        value += weight * float(gammaincc((p + 2 * k) / 2.0, statistic / 2.0))
        total_weight += weight
        k += 1
        weight *= half / k
        if k > 100000:
            raise NumericError("noncentral chi-square series failed to converge")
    return min(max(value, 0.0), 1.0)


def hotelling_t2(x) -> TestResult:
    """Classical one-sample statistic n xbar' S^-1 xbar with the centered S."""
    a = as_data_matrix(x)
    n, p = a.shape
    if n < p + 1:
        raise ValueError(f"need n >= p + 1 for an invertible centered covariance, got n={n}, p={p}")
    xbar = a.mean(axis=0)
    s = sample_covariance(a, mode="centered_n_minus_1")
    stat = n * _quad_form(xbar, s.matrix)
    return TestResult(stat, p, chisq_pvalue(stat, p), "hotelling", n, p)


def decomposite_t2(x) -> TestResult:
    """Shrinkage test n sum_i (u_i' xbar)^2 / psi_i in the spectral basis of S.

    S is the centered covariance; its effective sample count n - 1 feeds the
    eigenvalue shrinker.  Equals the classical statistic whenever psi = l
    (p = 1, or n >> p).
    """
    a = as_data_matrix(x)
    n, p = a.shape
    if n < p + 1:
        raise ValueError(f"need n >= p + 1 for an invertible centered covariance, got n={n}, p={p}")
    xbar = a.mean(axis=0)
    s = sample_covariance(a, mode="centered_n_minus_1")
    dec = spectral_decompose(s.matrix)
    if dec.eigenvalues[-1] <= 0.0:
        raise CovshrinkError("centered covariance is singular; cannot shrink its spectrum")
    table = tsai_eigenvalues(dec.eigenvalues, n - 1)
    proj = dec.eigenvectors.T @ xbar
    stat = n * float(np.sum(proj * proj / table.shrunk_eigenvalues))
    return TestResult(stat, p, chisq_pvalue(stat, p), "decomposite", n, p)


def oracle_t2(x, sigma) -> TestResult:
    """Reference statistic n xbar' sigma^-1 xbar with the true covariance.

    Exactly chi-square with p dof under the null, for any n.
    """
    a = as_data_matrix(x)
    n, p = a.shape
    xbar = a.mean(axis=0)
    stat = n * _quad_form(xbar, np.asarray(sigma, dtype=float))
    return TestResult(stat, p, chisq_pvalue(stat, p), "oracle", n, p)


@dataclass(frozen=True)
class LocalAlternative:
    """Mean-shift alternative mu = n^(-1/2) p^(1/4) delta with its noncentrality."""

    delta: np.ndarray
    n: int
    mu: np.ndarray = field(init=False)
    noncentrality: float

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if not np.isfinite(d).all():
            raise ValueError("delta must be finite")
        if self.noncentrality < 0.0:
            raise ValueError("noncentrality cannot be negative")
        p = d.shape[0]
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "mu", d * (p ** 0.25) / math.sqrt(self.n))


def local_alternative(delta, n: int, sigma=None) -> LocalAlternative:
    """Bundle delta with its implied mean and noncentrality delta' sigma^-1 delta."""
    d = np.asarray(delta, dtype=float)
    if sigma is None:
        ncp = float(d @ d)
    else:
        ncp = _quad_form(d, np.asarray(sigma, dtype=float))
    return LocalAlternative(delta=d, n=n, noncentrality=ncp)


@dataclass(frozen=True)
class PowerReport:
    """Empirical rejection rate of a mean test at the chi-square critical value."""

    rejection_rate: float
    std_error: float
    replicates: int
    failures: int
    critical_value: float
    alpha: float
    method: str
    rate: str
    n: int
    p: int
    seed: int


def power_simulation(n: int, p: int, sigma, delta, alpha: float = 0.05,
                     replicates: int = 1000, seed: int = 0,
                     method: str = "oracle", rate: str = "hdim",
                     threads: int = 1) -> PowerReport:
    """Monte Carlo rejection rate against the chi-square critical value.

    Parameters
    ----------
    rate : {"hdim", "classical"}
        Scaling of the mean shift.  "hdim" uses mu = n^(-1/2) p^(1/4) delta,
        the growing-dimension scaling; under it the oracle statistic is
        noncentral chi-square with noncentrality sqrt(p) delta' sigma^-1
        delta.  "classical" drops the p^(1/4) factor, giving noncentrality
        exactly delta' sigma^-1 delta.
    method : {"hotelling", "decomposite", "oracle"}

    Failed replicates (singular shrinkage) are recorded; more than 1 percent
    failures aborts, as in the risk runner.
    """
    if method not in TEST_METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {TEST_METHODS}")
    if rate not in RATES:
        raise ValueError(f"unknown rate {rate!r}, expected one of {RATES}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    sig = np.asarray(sigma, dtype=float)
    d = np.asarray(delta, dtype=float)
    if d.shape != (p,):
        raise ValueError(f"delta must have length p={p}, got shape {d.shape}")
    chol_sig = cholesky(sig)
    scale = p ** 0.25 if rate == "hdim" else 1.0
    mu = d * scale / math.sqrt(n)
    crit = float(chi2.ppf(1.0 - alpha, p))

    def one(r: int):
        rng = replicate_rng(seed, r)
        x = gaussian_rows(rng, chol_sig, n, mean=mu)
        try:
            if method == "hotelling":
                res = hotelling_t2(x)
            elif method == "decomposite":
                res = decomposite_t2(x)
            else:
                res = oracle_t2(x, sig)
            return bool(res.statistic > crit)
        except CovshrinkError:
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, range(replicates)))
    else:
        outcomes = [one(r) for r in range(replicates)]
    ok = [o for o in outcomes if o is not None]
    failures = replicates - len(ok)
    if failures > MAX_FAILURE_FRACTION * replicates:
        raise NumericError(
            f"{failures} of {replicates} replicates failed for method {method!r} "
            f"at n={n}, p={p}; above the {MAX_FAILURE_FRACTION:.0%} tolerance"
        )
    m = len(ok)
    rate_hat = sum(ok) / m
    se = math.sqrt(rate_hat * (1.0 - rate_hat) / m)
    return PowerReport(
        rejection_rate=rate_hat,
        std_error=se,
        replicates=m,
        failures=failures,
        critical_value=crit,
        alpha=alpha,
        method=method,
        rate=rate,
        n=n,
        p=p,
        seed=seed,
    )

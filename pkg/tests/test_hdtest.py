import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import chi2, ncx2

from covshrink import (
    chisq_pvalue,
    decomposite_t2,
    hotelling_t2,
    local_alternative,
    oracle_t2,
    power_simulation,
    sample_covariance,
    tsai_eigenvalues,
)
from covshrink.matrix_core import spectral_decompose


def random_spd(rng, p):
    g = rng.standard_normal((p, p))
    return g @ g.T + p * np.eye(p)


class TestChisqPvalue:
    def test_zero_statistic(self):
        assert chisq_pvalue(0.0, 3) == 1.0

    def test_two_dof_closed_form(self):
        # survival of chi2_2 is exp(-x/2)
        for x in (0.5, 2.0, 5.99146454710798):
            assert_allclose(chisq_pvalue(x, 2), math.exp(-x / 2), rtol=1e-12)

    def test_central_matches_scipy(self):
        for p in (1, 2, 5, 20):
            for x in (0.3, 2.0, 9.0, 40.0):
                assert_allclose(chisq_pvalue(x, p), chi2.sf(x, p), rtol=1e-10)

    def test_zero_noncentrality_is_central(self):
        for x in (0.7, 3.0, 11.0):
            assert chisq_pvalue(x, 4, noncentrality=0.0) == chisq_pvalue(x, 4)

    def test_noncentral_matches_scipy(self):
        for p in (1, 5, 10):
            for ncp in (0.5, 4.0, 8.944271909999159):
                for x in (1.0, 6.0, 15.0, 30.0):
                    assert_allclose(
                        chisq_pvalue(x, p, noncentrality=ncp),
                        ncx2.sf(x, p, ncp),
                        atol=1e-8,
                    )

    def test_noncentral_shifts_mass_right(self):
        assert chisq_pvalue(10.0, 5, noncentrality=4.0) > chisq_pvalue(10.0, 5)

    def test_domain(self):
        with pytest.raises(ValueError):
            chisq_pvalue(-1.0, 3)
        with pytest.raises(ValueError):
            chisq_pvalue(1.0, 3, noncentrality=-0.1)


class TestHotelling:
    def test_univariate_hand_value(self):
        # xbar=2, s2=2, n=2: T2 = 2 * 4 / 2 = 4
        res = hotelling_t2(np.array([[1.0], [3.0]]))
        assert_allclose(res.statistic, 4.0)
        assert res.dof == 1
        assert res.method == "hotelling"

    def test_antisymmetric_rows_give_zero(self):
        x = np.array([[1.0, 2.0], [-1.0, -2.0], [2.0, -1.0], [-2.0, 1.0]])
        assert_allclose(hotelling_t2(x).statistic, 0.0, atol=1e-20)

    def test_affine_invariance(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((20, 4))
        base = hotelling_t2(x).statistic
        g = rng.standard_normal((4, 4)) + 3 * np.eye(4)
        assert_allclose(hotelling_t2(x @ g.T).statistic, base, rtol=1e-9)

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            hotelling_t2(np.random.default_rng(0).standard_normal((4, 4)))


class TestDecomposite:
    def test_univariate_equals_hotelling(self):
        x = np.array([[1.0], [3.0]])
        assert_allclose(decomposite_t2(x).statistic, hotelling_t2(x).statistic)

    def test_zero_mean_rows_give_zero(self):
        # mean exactly zero but spectrum distinct, so the shrinker stays happy
        x = np.array([[3.0, 1.0], [-3.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        assert_allclose(decomposite_t2(x).statistic, 0.0, atol=1e-20)

    def test_spectral_route_matches_inverse_route(self):
        # second derivation: invert U diag(psi) U' directly and form the
        # quadratic form; both must agree to floating precision
        rng = np.random.default_rng(15)
        x = rng.standard_normal((40, 3)) + 0.3
        n = x.shape[0]
        res = decomposite_t2(x)
        s = sample_covariance(x, mode="centered_n_minus_1")
        dec = spectral_decompose(s.matrix)
        psi = tsai_eigenvalues(dec.eigenvalues, n - 1).shrunk_eigenvalues
        inv = (dec.eigenvectors / psi) @ dec.eigenvectors.T
        xbar = x.mean(axis=0)
        assert_allclose(res.statistic, n * xbar @ inv @ xbar, rtol=1e-10)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal((25, 4)) + 0.2
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        assert_allclose(decomposite_t2(x @ q.T).statistic, decomposite_t2(x).statistic, rtol=1e-9)

    def test_pvalue_consistent_with_statistic(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal((30, 3))
        res = decomposite_t2(x)
        assert_allclose(res.pvalue, chisq_pvalue(res.statistic, 3), rtol=1e-12)

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            decomposite_t2(np.random.default_rng(1).standard_normal((3, 3)))


class TestOracle:
    def test_identity_population_reduces_to_norm(self):
        x = np.array([[1.0, 0.0], [3.0, 2.0]])
        xbar = x.mean(axis=0)
        assert_allclose(oracle_t2(x, np.eye(2)).statistic, 2 * xbar @ xbar)

    def test_exact_null_quantile(self):
        # 95th percentile of the statistic against the chi-square quantile
        rng = np.random.default_rng(18)
        p, n, reps = 5, 50, 20000
        target = chi2.ppf(0.95, p)
        stats = np.empty(reps)
        for r in range(reps):
            x = rng.standard_normal((n, p))
            stats[r] = oracle_t2(x, np.eye(p)).statistic
        q = np.quantile(stats, 0.95)
        assert abs(q - target) / target < 0.02

    def test_pvalues_uniform_under_null(self):
        rng = np.random.default_rng(19)
        p, n, reps = 4, 30, 4000
        pv = np.empty(reps)
        for r in range(reps):
            x = rng.standard_normal((n, p))
            pv[r] = oracle_t2(x, np.eye(p)).pvalue
        grid = np.sort(pv)
        i = np.arange(1, reps + 1)
        ks = max(np.abs(grid - i / reps).max(), np.abs(grid - (i - 1) / reps).max())
        assert ks < 0.03


class TestLocalAlternative:
    def test_mu_scaling(self):
        alt = local_alternative(np.array([2.0, 0.0, 0.0, 0.0]), n=100)
        assert_allclose(alt.mu, np.array([2.0, 0.0, 0.0, 0.0]) * 4 ** 0.25 / 10.0)

    def test_identity_noncentrality(self):
        alt = local_alternative(np.array([3.0, 4.0]), n=50)
        assert_allclose(alt.noncentrality, 25.0)

    def test_sigma_weighted_noncentrality(self):
        alt = local_alternative(np.array([2.0, 0.0]), n=50, sigma=np.diag([4.0, 1.0]))
        assert_allclose(alt.noncentrality, 1.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            local_alternative(np.array([np.nan, 1.0]), n=10)


class TestPowerSimulation:
    def test_size_under_null(self):
        rep = power_simulation(
            n=40, p=3, sigma=np.eye(3), delta=np.zeros(3),
            replicates=2000, seed=21, method="oracle",
        )
        assert abs(rep.rejection_rate - 0.05) < 3 * max(rep.std_error, 1e-3)

    def test_classical_rate_matches_noncentral_prediction(self):
        # mu = delta/sqrt(n) gives an exactly noncentral oracle statistic
        p, delta = 4, np.array([2.0, 0.0, 0.0, 0.0])
        rep = power_simulation(
            n=60, p=p, sigma=np.eye(p), delta=delta,
            replicates=3000, seed=22, method="oracle", rate="classical",
        )
        predicted = ncx2.sf(chi2.ppf(0.95, p), p, 4.0)
        assert abs(rep.rejection_rate - predicted) < 3 * rep.std_error

    def test_hdim_rate_matches_noncentral_prediction(self):
        # mu = p^(1/4) delta/sqrt(n) boosts the noncentrality by sqrt(p)
        p, delta = 4, np.array([2.0, 0.0, 0.0, 0.0])
        rep = power_simulation(
            n=60, p=p, sigma=np.eye(p), delta=delta,
            replicates=3000, seed=23, method="oracle", rate="hdim",
        )
        predicted = ncx2.sf(chi2.ppf(0.95, p), p, 4.0 * math.sqrt(p))
        assert abs(rep.rejection_rate - predicted) < 3 * rep.std_error

    def test_power_monotone_in_shift(self):
        p = 3
        rates = []
        for t in (0.0, 1.5, 3.0):
            rep = power_simulation(
                n=50, p=p, sigma=np.eye(p), delta=t * np.eye(p)[0],
                replicates=1500, seed=24, method="oracle",
            )
            rates.append(rep.rejection_rate)
        assert rates[0] < rates[1] < rates[2]

    def test_decomposite_runs_and_reports(self):
        rep = power_simulation(
            n=80, p=2, sigma=np.eye(2), delta=np.array([1.0, 0.0]),
            replicates=400, seed=25, method="decomposite",
        )
        assert 0.0 <= rep.rejection_rate <= 1.0
        assert rep.replicates + rep.failures == 400

    def test_thread_determinism(self):
        a = power_simulation(n=30, p=2, sigma=np.eye(2), delta=np.zeros(2),
                             replicates=300, seed=26, threads=1)
        b = power_simulation(n=30, p=2, sigma=np.eye(2), delta=np.zeros(2),
                             replicates=300, seed=26, threads=4)
        assert a.rejection_rate == b.rejection_rate

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            power_simulation(n=30, p=2, sigma=np.eye(2), delta=np.zeros(2), method="bartlett")
        with pytest.raises(ValueError):
            power_simulation(n=30, p=2, sigma=np.eye(2), delta=np.zeros(2), rate="sqrt")
        with pytest.raises(ValueError):
            power_simulation(n=30, p=2, sigma=np.eye(2), delta=np.zeros(2), alpha=1.5)
        with pytest.raises(ValueError):
            power_simulation(n=30, p=2, sigma=np.eye(2), delta=np.zeros(3))

import numpy as np
import pytest
from numpy.testing import assert_allclose

from covshrink import (
    NotPositiveDefiniteError,
    NumericError,
    elog_chisq,
    min_risk,
    monte_carlo_risk,
    stein_loss,
)
from covshrink.loss_risk import replicate_losses

EULER_GAMMA = 0.5772156649015329


def random_spd(rng, p):
    g = rng.standard_normal((p, p))
    return g @ g.T + p * np.eye(p)


class TestSteinLoss:
    def test_zero_at_truth(self):
        rng = np.random.default_rng(1)
        for p in (1, 3, 8):
            s = random_spd(rng, p)
            assert abs(stein_loss(s, s)) < 1e-12

    def test_scalar_hand_value(self):
        # phi=2, sigma=1: 2 - log 2 - 1
        assert_allclose(stein_loss([[2.0]], [[1.0]]), 1.0 - np.log(2.0))

    def test_scaled_identity(self):
        # phi = 2 sigma in p dims: p (1 - log 2)
        p = 4
        assert_allclose(stein_loss(2 * np.eye(p), np.eye(p)), p * (2 - np.log(2.0) - 1))

    def test_diagonal_hand_value(self):
        loss = stein_loss(np.diag([2.0, 1.0]), np.eye(2))
        assert_allclose(loss, 1.0 - np.log(2.0))

    def test_positive_away_from_truth(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            p = int(rng.integers(1, 7))
            phi, sigma = random_spd(rng, p), random_spd(rng, p)
            loss = stein_loss(phi, sigma)
            assert loss > 0 or np.abs(phi - sigma).max() < 1e-10

    def test_invariance_under_congruence(self):
        # loss(G phi G', G sigma G') = loss(phi, sigma) for invertible G
        rng = np.random.default_rng(3)
        p = 5
        phi, sigma = random_spd(rng, p), random_spd(rng, p)
        base = stein_loss(phi, sigma)
        for _ in range(10):
            g = rng.standard_normal((p, p)) + 3 * np.eye(p)
            assert_allclose(stein_loss(g @ phi @ g.T, g @ sigma @ g.T), base, rtol=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            stein_loss(np.eye(2), np.eye(3))

    def test_degenerate_estimate_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            stein_loss(np.zeros((2, 2)), np.eye(2))


class TestElogChisq:
    def test_two_dof_is_minus_euler_gamma(self):
        # E[log chi2_2] = log 2 - gamma
        assert_allclose(elog_chisq(2), np.log(2.0) - EULER_GAMMA, rtol=1e-12)

    def test_four_dof(self):
        # digamma(2) = 1 - gamma
        assert_allclose(elog_chisq(4), np.log(2.0) + 1.0 - EULER_GAMMA, rtol=1e-12)

    def test_monotone_in_dof(self):
        vals = elog_chisq(np.arange(1, 101))
        assert np.all(np.diff(vals) > 0)

    def test_below_log_k(self):
        # Jensen: E[log] < log E
        for k in (1, 2, 5, 30, 200):
            assert elog_chisq(k) < np.log(k)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(10)
        n = 10_000_000
        for k in (3, 12):
            draws = np.log(rng.chisquare(k, n))
            se = draws.std(ddof=1) / np.sqrt(n)
            assert abs(draws.mean() - elog_chisq(k)) < 3 * se

    def test_domain(self):
        with pytest.raises(ValueError):
            elog_chisq(0)


class TestMinRisk:
    def test_univariate_all_kinds_coincide(self):
        # p=1: every divisor is n, so the class minima agree
        for n in (2, 10, 50):
            ml = min_risk("ml", n, 1)
            assert_allclose(min_risk("stein", n, 1), ml)
            assert_allclose(min_risk("dp", n, 1), ml)
            assert_allclose(ml, np.log(n) - elog_chisq(n))

    def test_smallest_case_is_euler_gamma(self):
        # n=2, p=1: log 2 - E[log chi2_2] = gamma
        assert_allclose(min_risk("ml", 2, 1), EULER_GAMMA, rtol=1e-12)

    def test_ordering_for_p_at_least_2(self):
        for n, p in ((10, 3), (50, 10), (100, 99)):
            dp = min_risk("dp", n, p)
            st = min_risk("stein", n, p)
            ml = min_risk("ml", n, p)
            assert dp < st < ml

    def test_hand_value_n10_p3(self):
        i = np.arange(1, 4)
        expected = float(np.sum(np.log([12.0, 10.0, 8.0]) - elog_chisq(10 - i + 1)))
        assert_allclose(min_risk("stein", 10, 3), expected, rtol=1e-12)

    def test_domain_and_kind(self):
        with pytest.raises(ValueError):
            min_risk("ml", 3, 4)
        with pytest.raises(ValueError):
            min_risk("mle", 10, 2)


class TestMonteCarloRisk:
    def test_matches_closed_forms(self):
        # each equivariant estimator attains its class minimum; 3 SE bands
        n, p, reps = 20, 4, 2000
        sigma = np.eye(p)
        for method, kind in (
            ("sample", "ml"),
            ("stein_triangular", "stein"),
            ("dp_equivariant", "dp"),
        ):
            est = monte_carlo_risk(method, sigma, n=n, replicates=reps, seed=515)
            assert abs(est.mean_loss - min_risk(kind, n, p)) < 3 * est.std_error
            assert est.failures == 0

    def test_population_invariance(self):
        # equivariant risks cannot depend on sigma; identity vs a full matrix
        rng = np.random.default_rng(8)
        sigma = random_spd(rng, 3)
        a = monte_carlo_risk("stein_triangular", np.eye(3), n=15, replicates=1500, seed=99)
        b = monte_carlo_risk("stein_triangular", sigma, n=15, replicates=1500, seed=99)
        assert_allclose(a.mean_loss, b.mean_loss, rtol=1e-9)

    def test_seed_determinism(self):
        a = monte_carlo_risk("sample", np.eye(2), n=10, replicates=200, seed=7)
        b = monte_carlo_risk("sample", np.eye(2), n=10, replicates=200, seed=7)
        assert a.mean_loss == b.mean_loss
        assert a.std_error == b.std_error

    def test_thread_count_does_not_change_result(self):
        a = monte_carlo_risk("sample", np.eye(3), n=12, replicates=300, seed=11, threads=1)
        b = monte_carlo_risk("sample", np.eye(3), n=12, replicates=300, seed=11, threads=4)
        assert a.mean_loss == b.mean_loss

    def test_seed_changes_result(self):
        a = monte_carlo_risk("sample", np.eye(2), n=10, replicates=200, seed=1)
        b = monte_carlo_risk("sample", np.eye(2), n=10, replicates=200, seed=2)
        assert a.mean_loss != b.mean_loss

    def test_failure_fraction_aborts(self):
        # clustered sample spectra at c=1/2 break the shrinker almost surely
        with pytest.raises(NumericError):
            monte_carlo_risk("tsai", np.eye(30), n=60, replicates=100, seed=3)

    def test_replicate_floor(self):
        with pytest.raises(ValueError):
            monte_carlo_risk("sample", np.eye(2), n=10, replicates=50, seed=1)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            monte_carlo_risk("oas", np.eye(2), n=10, replicates=200, seed=1)


class TestReplicateLosses:
    def test_pivot_method_scored_against_pivot_diagonal(self):
        sigma = np.array([[4.0, 2.0], [2.0, 5.0]])
        _, target = replicate_losses("dp_equivariant", sigma, n=10, replicates=2, seed=0)
        assert_allclose(target, np.diag([4.0, 4.0]))

    def test_other_methods_scored_against_sigma(self):
        sigma = np.array([[4.0, 2.0], [2.0, 5.0]])
        _, target = replicate_losses("sample", sigma, n=10, replicates=2, seed=0)
        assert_allclose(target, sigma)

    def test_failures_recorded_as_none(self):
        losses, _ = replicate_losses("tsai", np.eye(20), n=40, replicates=20, seed=5)
        assert any(v is None for v in losses)
        assert len(losses) == 20

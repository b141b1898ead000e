"""Gold-standard inference: exact enumeration cross-checked by hand-built
partition sums, and the collapsed Gibbs sampler checked against enumeration."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import logsumexp

from dpmseq.core import NIGParams, NIWParams, nig_log_predictive
from dpmseq.oracle import (
    GibbsConfig, collapsed_gibbs, enumerate_exact, gibbs_predictive,
    gibbs_predictive_draws,
)

from conftest import nig_log_marginal

PRIOR = NIGParams(0.0, 1.0, 1.0, 1.0)


def _draw_distribution(samples):
    """Empirical distribution over relabeled allocation strings."""
    strings, counts = np.unique(samples.allocation_draws, axis=0,
                                return_counts=True)
    total = counts.sum()
    return {tuple(s): c / total for s, c in zip(strings, counts)}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

class TestEnumeration:
    def test_single_observation(self):
        post = enumerate_exact([1.3], 1.0, None, PRIOR)
        assert abs(post.log_marginal
                   - nig_log_predictive(PRIOR, 1.3)) < 1e-12
        assert post.allocation_posterior == {(0,): 1.0}

    def test_two_observations_by_hand(self):
        """N = 2 has exactly two partitions; sum them directly."""
        ys = [0.4, -0.9]
        alpha = 0.7
        together = np.log(1.0 / (alpha + 1)) + nig_log_marginal(PRIOR, ys)
        apart = (np.log(alpha / (alpha + 1))
                 + nig_log_marginal(PRIOR, ys[:1])
                 + nig_log_marginal(PRIOR, ys[1:]))
        ref = logsumexp([together, apart])
        post = enumerate_exact(ys, alpha, None, PRIOR)
        assert abs(post.log_marginal - ref) < 1e-12
        assert abs(post.allocation_posterior[(0, 0)]
                   - np.exp(together - ref)) < 1e-12
        assert abs(post.allocation_posterior[(0, 1)]
                   - np.exp(apart - ref)) < 1e-12

    def test_level_one_truncation_pools_everything(self):
        ys = np.random.default_rng(0).normal(0, 2, size=6)
        post = enumerate_exact(ys, 1.0, 1, PRIOR)
        assert abs(post.log_marginal - nig_log_marginal(PRIOR, ys)) < 1e-10
        assert list(post.allocation_posterior) == [tuple([0] * 6)]

    def test_posterior_sums_to_one(self):
        ys = np.random.default_rng(1).normal(0, 2, size=6)
        for T in (None, 2, 3):
            post = enumerate_exact(ys, 1.5, T, PRIOR)
            assert abs(sum(post.allocation_posterior.values()) - 1.0) < 1e-10

    def test_exchangeability(self):
        """The joint marginal cannot depend on the data ordering."""
        rng = np.random.default_rng(2)
        ys = rng.normal(0, 3, size=6)
        for T in (None, 3):
            base = enumerate_exact(ys, 0.8, T, PRIOR).log_marginal
            for _ in range(4):
                perm = rng.permutation(6)
                assert abs(enumerate_exact(ys[perm], 0.8, T,
                                           PRIOR).log_marginal
                           - base) < 1e-10

    def test_predictive_integrates_to_one(self):
        ys = np.random.default_rng(3).normal(0, 2, size=5)
        post = enumerate_exact(ys, 1.0, 3, PRIOR)
        total, _ = quad(lambda y: post.predictive(y)[0], -np.inf, np.inf)
        assert abs(total - 1.0) < 1e-6

    def test_size_cap_enforced(self):
        with pytest.raises(ValueError):
            enumerate_exact(np.zeros(11), 1.0, None, PRIOR)

    def test_multivariate_two_observations_by_hand(self):
        prior = NIWParams(np.zeros(2), 1.0, np.eye(2), 4.0)
        ys = np.array([[0.5, -0.2], [-0.3, 0.8]])
        alpha = 1.0
        from dpmseq.core import niw_log_predictive, niw_weighted_update
        m_pair = (niw_log_predictive(prior, ys[0])
                  + niw_log_predictive(
                      niw_weighted_update(prior, ys[0], 1.0), ys[1]))
        m_solo = (niw_log_predictive(prior, ys[0])
                  + niw_log_predictive(prior, ys[1]))
        ref = logsumexp([np.log(0.5) + m_pair, np.log(0.5) + m_solo])
        post = enumerate_exact(ys, alpha, None, prior)
        assert abs(post.log_marginal - ref) < 1e-10


# ---------------------------------------------------------------------------
# Collapsed Gibbs
# ---------------------------------------------------------------------------

class TestCollapsedGibbs:
    CFG = GibbsConfig(burnin=200, iters=500, seed=7)

    def test_deterministic_given_seed(self):
        ys = np.random.default_rng(4).normal(0, 2, size=20)
        s1 = collapsed_gibbs(ys, 1.0, PRIOR, self.CFG)
        s2 = collapsed_gibbs(ys, 1.0, PRIOR, self.CFG)
        assert np.array_equal(s1.allocation_draws, s2.allocation_draws)
        s3 = collapsed_gibbs(ys, 1.0, PRIOR,
                             GibbsConfig(burnin=200, iters=500, seed=8))
        assert not np.array_equal(s1.allocation_draws, s3.allocation_draws)

    def test_single_observation_always_label_zero(self):
        s = collapsed_gibbs([2.0], 1.0, PRIOR, self.CFG)
        assert np.all(s.allocation_draws == 0)
        assert np.all(s.cluster_count_draws == 1)

    def test_draws_are_order_of_appearance_relabeled(self):
        ys = np.random.default_rng(5).normal(0, 4, size=15)
        s = collapsed_gibbs(ys, 2.0, PRIOR, self.CFG)
        for z in s.allocation_draws[::100]:
            seen = -1
            for lab in z:
                assert lab <= seen + 1
                seen = max(seen, lab)

    def test_truncation_respected(self):
        ys = np.random.default_rng(6).uniform(-20, 20, size=25)
        s = collapsed_gibbs(ys, 5.0, PRIOR, self.CFG, trunc=3)
        assert s.allocation_draws.max() <= 2

    def test_matches_enumeration_distribution(self):
        ys = np.random.default_rng(7).normal(0, 2, size=6)
        exact = enumerate_exact(ys, 1.0, None, PRIOR)
        samples = collapsed_gibbs(
            ys, 1.0, PRIOR, GibbsConfig(burnin=500, iters=8000, seed=1))
        tv = total_variation(_draw_distribution(samples),
                             exact.allocation_posterior)
        assert tv < 0.08

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            GibbsConfig(burnin=-1, iters=100, seed=0)
        with pytest.raises(ValueError):
            GibbsConfig(burnin=0, iters=0, seed=0)

    def test_generic_path_multivariate_runs_and_is_deterministic(self):
        prior = NIWParams(np.zeros(2), 1.0, np.eye(2), 4.0)
        ys = np.random.default_rng(8).normal(0, 1, size=(8, 2))
        cfg = GibbsConfig(burnin=20, iters=50, seed=3)
        s1 = collapsed_gibbs(ys, 1.0, prior, cfg)
        s2 = collapsed_gibbs(ys, 1.0, prior, cfg)
        assert np.array_equal(s1.allocation_draws, s2.allocation_draws)
        assert s1.allocation_draws.shape == (50, 8)

    def test_generic_path_matches_enumeration(self):
        prior = NIWParams(np.zeros(1), 1.0, np.eye(1), 2.0)
        ys = np.random.default_rng(9).normal(0, 1.5, size=(5, 1))
        exact = enumerate_exact(ys, 1.0, None, prior)
        samples = collapsed_gibbs(
            ys, 1.0, prior, GibbsConfig(burnin=300, iters=4000, seed=2))
        tv = total_variation(_draw_distribution(samples),
                             exact.allocation_posterior)
        assert tv < 0.1


class TestGibbsPredictive:
    def test_integrates_to_one(self):
        ys = np.random.default_rng(10).normal(0, 2, size=20)
        samples = collapsed_gibbs(
            ys, 1.0, PRIOR, GibbsConfig(burnin=100, iters=200, seed=0))
        total, _ = quad(
            lambda y: gibbs_predictive(samples, ys, PRIOR, 1.0, y)[0],
            -np.inf, np.inf)
        assert abs(total - 1.0) < 1e-6

    def test_matches_exact_predictive_within_mc_error(self):
        ys = np.random.default_rng(11).normal(0, 2, size=6)
        exact = enumerate_exact(ys, 1.0, None, PRIOR)
        samples = collapsed_gibbs(
            ys, 1.0, PRIOR, GibbsConfig(burnin=500, iters=6000, seed=4))
        grid = np.linspace(-4, 4, 9)
        per_draw = gibbs_predictive_draws(samples, ys, PRIOR, 1.0, grid)
        est = per_draw.mean(axis=0)
        # batch-means standard error to respect chain autocorrelation
        nb = 30
        blocks = per_draw[: (len(per_draw) // nb) * nb].reshape(
            nb, -1, len(grid)).mean(axis=1)
        se = blocks.std(axis=0, ddof=1) / np.sqrt(nb)
        ref = exact.predictive(grid)
        assert np.all(np.abs(est - ref) < 4 * se + 1e-12)

    def test_per_draw_matrix_shape(self):
        ys = np.random.default_rng(12).normal(size=10)
        samples = collapsed_gibbs(
            ys, 1.0, PRIOR, GibbsConfig(burnin=10, iters=40, seed=5))
        mat = gibbs_predictive_draws(samples, ys, PRIOR, 1.0,
                                     np.linspace(-2, 2, 7))
        assert mat.shape == (40, 7)
        assert np.all(mat > 0)

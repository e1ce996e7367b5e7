from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from albatch.classifier import CalibratedClassifier, KernelParams, train
from albatch.mixture import GmmFitConfig, child_seed, score_samples, select_k
from albatch.strategies import (
    BalancingParams,
    QueryBatch,
    balance,
    entropy,
    sample_adaptive,
    sample_informative,
    sample_kmedoids,
    sample_max_entropy,
    sample_random,
    sample_representative,
)
from conftest import two_blobs


def prior_clf(p1=0.5):
    return CalibratedClassifier(None, None, (0, 1), prior_p1=p1)


class TestBalance:
    def test_golden_table(self, balance_golden):
        assert len(balance_golden) == 40
        for case in balance_golden:
            got = balance(case["t"], BalancingParams(case["b"], case["c"], case["T1"], case["T2"]))
            assert (got.n_repr, got.n_info) == (case["n_repr"], case["n_info"]), case

    def test_parts_sum_to_b(self):
        for b in (1, 7, 20):
            for c in (0.0, 0.3, 0.5, 1.0):
                p = BalancingParams(b, c, 2, 9)
                for t in range(1, 15):
                    a = balance(t, p)
                    assert a.n_repr + a.n_info == b
                    assert a.n_repr >= 0 and a.n_info >= 0

    def test_monotone_transition(self):
        # c=0 and T2-T1 <= b: n_info strictly increases across the middle branch
        p = BalancingParams(20, 0.0, 3, 20)
        infos = [balance(t, p).n_info for t in range(4, 20)]
        assert all(b > a for a, b in zip(infos, infos[1:]))

    def test_float_ceil_guard(self):
        # 100 * 0.07 floats to 7.000000000000001; ceil must stay 7
        a = balance(1, BalancingParams(100, 0.07, 0, 5))
        assert a.n_info == 8  # (1 + 7) % 100

    def test_invalid(self):
        with pytest.raises(ValueError):
            BalancingParams(20, 1.5, 0, 5)
        with pytest.raises(ValueError):
            BalancingParams(20, 0.0, 5, 5)
        with pytest.raises(ValueError):
            balance(0, BalancingParams(20, 0.0, 0, 5))


class TestEntropy:
    def test_uniform_binary(self):
        assert entropy([0.5, 0.5]) == pytest.approx(np.log(2), abs=1e-12)

    def test_one_hot(self):
        assert entropy([1.0, 0.0]) == 0.0

    def test_skewed(self):
        assert entropy([0.9, 0.1]) == pytest.approx(0.325083, abs=1e-6)

    def test_invalid(self):
        with pytest.raises(ValueError):
            entropy([0.7, 0.7])
        with pytest.raises(ValueError):
            entropy([-0.1, 1.1])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**31 - 1))
    def test_permutation_invariant_and_bounded(self, k, seed):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(k))
        h = entropy(p)
        assert h == pytest.approx(entropy(rng.permutation(p)), abs=1e-12)
        assert 0.0 <= h <= np.log(k) + 1e-12


class TestSampleRandom:
    def test_exhaustion(self):
        U = np.array([3, 8, 9])
        assert sorted(sample_random(U, 5, 0).indices) == [3, 8, 9]

    def test_determinism(self):
        U = np.arange(1000)
        a, b = sample_random(U, 20, 4), sample_random(U, 20, 4)
        assert a.indices == b.indices
        assert sample_random(U, 20, 5).indices != a.indices

    def test_uniform_frequency(self):
        U = np.arange(10)
        counts = Counter()
        for s in range(10_000):
            counts[sample_random(U, 1, s).indices[0]] += 1
        assert all(880 <= counts[i] <= 1120 for i in U)

    def test_empty_pool(self):
        with pytest.raises(ValueError, match="empty"):
            sample_random(np.array([], dtype=int), 3, 0)


class TestSampleMaxEntropy:
    def test_degenerate_prior_takes_lowest_indices(self):
        U = np.array([12, 4, 9, 30, 2])
        X = np.random.default_rng(0).normal(size=(40, 2))
        batch = sample_max_entropy(U, prior_clf(), X, 3)
        assert batch.indices == (2, 4, 9)

    def test_entropy_ordering(self):
        # pool spans near-0.5 / lopsided / extreme probabilities; the most
        # uncertain point (the boundary midpoint) must win
        Xtr = np.array([[-1.0], [1.0]])
        clf = train(Xtr, np.array([0, 1]), KernelParams(0.8, 5.0))
        pool = np.array([[0.0], [0.8], [3.0]])
        batch = sample_max_entropy(np.arange(3), clf, pool, 1)
        assert batch.indices == (0,)

    def test_scores_are_top_entropies(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 2)) * 2
        clf = train(X[:10], np.array([0, 1] * 5), KernelParams(0.5, 1.0))
        U = np.arange(10, 30)
        batch = sample_max_entropy(U, clf, X, 5)
        from albatch.strategies import _entropy_rows
        from albatch.classifier import predict_proba_batch
        H = _entropy_rows(predict_proba_batch(clf, X[U]))
        assert sorted(batch.scores, reverse=True) == pytest.approx(
            sorted(H, reverse=True)[:5])

    def test_provenance(self):
        U = np.arange(5)
        X = np.random.default_rng(2).normal(size=(5, 2))
        batch = sample_max_entropy(U, prior_clf(), X, 2)
        assert set(batch.provenance) == {"max_entropy"}


class TestSampleKmedoids:
    def test_pool_exhaustion(self):
        U = np.array([5, 6, 7])
        X = np.random.default_rng(0).normal(size=(10, 2))
        batch = sample_kmedoids(U, X, 3, 0)
        assert sorted(batch.indices) == [5, 6, 7]

    def test_one_medoid_per_blob(self):
        X, _ = two_blobs(n_per=25, offset=12.0, seed=3)
        batch = sample_kmedoids(np.arange(50), X, 2, 1)
        sides = {X[i, 0] > 6 for i in batch.indices}
        assert sides == {False, True}

    def test_subset_of_pool(self):
        X = np.random.default_rng(4).normal(size=(30, 3))
        U = np.arange(10, 30, 2)
        batch = sample_kmedoids(U, X, 4, 2)
        assert set(batch.indices) <= set(U.tolist())


class TestSampleRepresentative:
    def test_k1_fallback_mixes_mean_and_low_likelihood(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((60, 2))
        X[13] = [9.0, 9.0]
        X[27] = [-8.0, 6.0]
        U = np.arange(60)
        cfg = GmmFitConfig(k_min=1, k_max=1, n_init=1)
        batch = sample_representative(U, X, 3, cfg, seed=1)
        assert len(batch.indices) == 3
        # one pick hugs the blob mean, the rest are the two planted outliers
        model = select_k(X, cfg, child_seed(1, 11))
        nearest_mean = int(np.argmin(((X - model.means[0]) ** 2).sum(axis=1)))
        assert batch.indices[0] == nearest_mean
        assert set(batch.indices[1:]) == {13, 27}

    def test_low_density_cluster_found(self):
        rng = np.random.default_rng(6)
        X = np.vstack([
            rng.standard_normal((400, 2)),
            rng.standard_normal((12, 2)) * 0.8 + [9.0, 0.0],
        ])
        hits = 0
        for seed in range(10):
            batch = sample_representative(
                np.arange(len(X)), X, 5, GmmFitConfig(k_max=5, n_init=2), seed)
            hits += any(i >= 400 for i in batch.indices)
        assert hits >= 8

    def test_distinct_and_in_pool(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(50, 2))
        U = np.arange(10, 50)
        batch = sample_representative(U, X, 6, GmmFitConfig(k_max=3, n_init=1), 0)
        assert len(set(batch.indices)) == 6
        assert set(batch.indices) <= set(U.tolist())
        assert set(batch.provenance) == {"representative"}

    def test_scores_are_pool_log_densities(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(40, 2))
        U = np.arange(40)
        cfg = GmmFitConfig(k_max=2, n_init=1)
        batch = sample_representative(U, X, 4, cfg, seed=3)
        model = select_k(X, cfg, child_seed(3, 11))
        dens = score_samples(model, X)
        for i, s in zip(batch.indices, batch.scores):
            assert s == pytest.approx(dens[i], abs=1e-9)


class TestSampleInformative:
    def test_full_batch_uses_whole_pool(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(30, 2))
        U = np.arange(30)
        batch = sample_informative(U, X, prior_clf(), 5, 5, seed=0)
        assert len(batch.indices) == 5
        assert set(batch.provenance) == {"informative"}

    def test_single_pick_is_top_entropy(self):
        Xtr = np.array([[-1.0], [1.0]])
        clf = train(Xtr, np.array([0, 1]), KernelParams(0.8, 5.0))
        pool = np.linspace(-2, 2, 10)[:, None]
        U = np.arange(10)
        batch = sample_informative(U, pool, clf, 1, 20, seed=0)
        from albatch.strategies import _entropy_rows
        from albatch.classifier import predict_proba_batch
        H = _entropy_rows(predict_proba_batch(clf, pool))
        assert batch.indices[0] == int(np.argmax(H))

    def test_two_boundary_clusters_one_pick_each(self):
        rng = np.random.default_rng(10)
        up = rng.normal(scale=0.1, size=(3, 2)) + [0.0, 5.0]
        down = rng.normal(scale=0.1, size=(3, 2)) + [0.0, -5.0]
        pool = np.vstack([up, down])
        clf = train(np.array([[-1.0, 0.0], [1.0, 0.0]]), np.array([0, 1]),
                    KernelParams(0.5, 5.0))
        batch = sample_informative(np.arange(6), pool, clf, 2, 2, seed=1)
        sides = {pool[i, 1] > 0 for i in batch.indices}
        assert sides == {False, True}

    def test_candidate_fraction(self):
        # n_info/b = 1/4 of a 40-point pool -> 10 candidates, verified by
        # checking picks are within the top-10 entropy set
        rng = np.random.default_rng(11)
        Xtr = np.array([[-1.0], [1.0]])
        clf = train(Xtr, np.array([0, 1]), KernelParams(0.8, 5.0))
        pool = np.linspace(-4, 4, 40)[:, None]
        batch = sample_informative(np.arange(40), pool, clf, 1, 4, seed=2)
        from albatch.strategies import _entropy_rows
        from albatch.classifier import predict_proba_batch
        H = _entropy_rows(predict_proba_batch(clf, pool))
        top10 = set(np.argsort(-H, kind="stable")[:10].tolist())
        assert set(batch.indices) <= top10


class TestSampleAdaptive:
    def setup_method(self):
        rng = np.random.default_rng(12)
        self.X = np.vstack([rng.normal(size=(80, 2)), rng.normal(size=(10, 2)) + 7.0])
        self.U = np.arange(90)
        self.clf = train(self.X[:20], np.array([0, 1] * 10), KernelParams(0.5, 1.0))
        self.cfg = GmmFitConfig(k_max=3, n_init=1)

    def test_past_t2_equals_pure_informative(self):
        p = BalancingParams(10, 0.0, 0, 5)
        got = sample_adaptive(self.U, self.X, self.clf, 6, p, self.cfg, seed=4)
        want = sample_informative(self.U, self.X, self.clf, 10, 10, child_seed(4, 2))
        assert got.indices == want.indices
        assert set(got.provenance) == {"informative"}

    def test_before_t1_equals_pure_representative_and_skips_classifier(self):
        p = BalancingParams(10, 0.0, 3, 5)
        got = sample_adaptive(self.U, self.X, None, 1, p, self.cfg, seed=4)
        want = sample_representative(self.U, self.X, 10, self.cfg, child_seed(4, 1))
        assert got.indices == want.indices
        assert set(got.provenance) == {"representative"}

    def test_middle_branch_counts_and_disjoint(self):
        p = BalancingParams(20, 0.0, 0, 5)
        got = sample_adaptive(self.U, self.X, self.clf, 3, p, self.cfg, seed=6)
        tags = Counter(got.provenance)
        assert tags["representative"] == 17 and tags["informative"] == 3
        assert len(set(got.indices)) == 20

    def test_small_pool_scales_allocation(self):
        p = BalancingParams(20, 0.0, 0, 5)
        small = self.U[:10]
        got = sample_adaptive(small, self.X, self.clf, 3, p, self.cfg, seed=7)
        assert len(got.indices) == 10
        tags = Counter(got.provenance)
        # (17, 3) scaled by 10/20 -> (8, 1) + remainder 1 to the larger share
        assert tags["representative"] == 9 and tags["informative"] == 1


class TestQueryBatchInvariants:
    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            QueryBatch((1, 1), ("random", "random"), (0.0, 0.0))

    def test_unknown_provenance_rejected(self):
        with pytest.raises(ValueError, match="provenance"):
            QueryBatch((1,), ("mystery",), (0.0,))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 12))
    def test_samplers_contract(self, seed, b):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(25, 2))
        U = np.sort(rng.choice(25, size=15, replace=False))
        for batch in (
            sample_random(U, b, seed),
            sample_max_entropy(U, prior_clf(), X, b),
            sample_kmedoids(U, X, b, seed),
        ):
            assert len(batch.indices) == min(b, 15)
            assert len(set(batch.indices)) == len(batch.indices)
            assert set(batch.indices) <= set(U.tolist())

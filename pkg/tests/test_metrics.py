import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from albatch.metrics import MetricsRecord, aggregate, discovery_count, prauc


def prauc_oracle(scores, labels):
    """Exhaustive threshold sweep with direct counting; no sorting tricks."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    pts = []
    for thr in sorted(set(scores.tolist()), reverse=True):
        predicted = scores >= thr
        tp = int(((labels == 1) & predicted).sum())
        pts.append((tp / n_pos, tp / int(predicted.sum())))
    ap, prev_recall = 0.0, 0.0
    for recall, precision in pts:
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


class TestPrauc:
    def test_perfect_ranking(self):
        assert prauc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_ties_give_prevalence(self):
        labels = [1, 0, 0, 0, 1, 0, 0, 0, 0, 0]
        assert prauc([0.5] * 10, labels) == pytest.approx(0.2)

    def test_hand_enumerated_case(self):
        assert prauc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(5 / 6)

    def test_zero_positives_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            prauc([0.1, 0.2], [0, 0])

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            m = int(rng.integers(2, 13))
            labels = rng.integers(0, 2, m)
            if labels.sum() == 0:
                labels[0] = 1
            scores = rng.choice([0.1, 0.25, 0.5, 0.7, 0.9], size=m)  # force ties
            assert prauc(scores, labels) == pytest.approx(
                prauc_oracle(scores, labels), abs=1e-12)

    def test_random_shuffle_concentrates_near_prevalence(self):
        # AP under a random ranking is biased slightly above prevalence
        # (E[AP] ~ 0.122 for m=200, pi=0.1), so the band covers bias + noise
        g = np.random.default_rng(6)
        labels = np.zeros(200, dtype=int)
        labels[:20] = 1
        scores = g.random(200)
        vals = [prauc(scores, g.permutation(labels)) for _ in range(1000)]
        assert abs(np.mean(vals) - 0.1) < 0.03
        assert np.quantile(vals, 0.9) < 0.2

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_invariant_under_monotone_transform(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(3, 20))
        scores = rng.normal(size=m)
        labels = rng.integers(0, 2, m)
        if labels.sum() == 0:
            labels[0] = 1
        a = prauc(scores, labels)
        b = prauc(np.exp(2.0 * scores) + 5.0, labels)
        assert a == pytest.approx(b, abs=1e-12)


class TestDiscoveryCount:
    TRUTH = np.array([0, 1, 0, 1, 1, 0])

    def test_mapping_input(self):
        assert discovery_count({1: 1, 0: 0}, self.TRUTH) == 1

    def test_sequence_input(self):
        assert discovery_count([3, 4], self.TRUTH) == 2

    def test_empty(self):
        assert discovery_count({}, self.TRUTH) == 0

    def test_increment(self):
        L = {0: 0, 1: 1}
        before = discovery_count(L, self.TRUTH)
        L[4] = 1
        assert discovery_count(L, self.TRUTH) == before + 1


class TestAggregate:
    def test_identical_runs_zero_width(self):
        curve = aggregate([[0.5, 0.7], [0.5, 0.7], [0.5, 0.7]])
        np.testing.assert_allclose(curve.mean, [0.5, 0.7], atol=1e-12)
        np.testing.assert_allclose(curve.ci_low, curve.mean, atol=1e-12)
        np.testing.assert_allclose(curve.ci_high, curve.mean, atol=1e-12)

    def test_two_runs_t_interval(self):
        curve = aggregate([[0.4], [0.6]])
        assert curve.mean[0] == pytest.approx(0.5)
        # t(0.975, 1) * sd / sqrt(2) = 12.7062... * 0.1414 / 1.414 = 1.27062
        assert curve.ci_high[0] - curve.mean[0] == pytest.approx(1.27062, abs=1e-4)
        assert curve.ci_low[0] == pytest.approx(0.5 - 1.27062, abs=1e-4)

    def test_clip_range(self):
        curve = aggregate([[0.4], [0.6]], clip=(0.0, 1.0))
        assert curve.ci_low[0] == 0.0 and curve.ci_high[0] == 1.0
        assert curve.mean[0] == pytest.approx(0.5)

    def test_against_scipy_interval_oracle(self):
        rng = np.random.default_rng(1)
        vals = rng.normal(0.5, 0.1, size=(8, 1))
        curve = aggregate(vals.tolist())
        lo, hi = stats.t.interval(0.95, 7, loc=vals.mean(), scale=stats.sem(vals.ravel()))
        assert curve.ci_low[0] == pytest.approx(lo, abs=1e-12)
        assert curve.ci_high[0] == pytest.approx(hi, abs=1e-12)

    def test_permutation_invariant(self):
        runs = [[0.2, 0.3], [0.5, 0.6], [0.4, 0.9]]
        a = aggregate(runs)
        b = aggregate(runs[::-1])
        np.testing.assert_allclose(a.mean, b.mean)
        np.testing.assert_allclose(a.ci_low, b.ci_low)

    def test_truncated_runs_padded_and_flagged(self):
        curve = aggregate([[0.2, 0.4, 0.6], [0.3, 0.5]])
        assert curve.n_padded == 1
        assert curve.mean[2] == pytest.approx((0.6 + 0.5) / 2)

    def test_single_run_degenerate(self):
        curve = aggregate([[0.1, 0.2]])
        assert curve.degenerate
        np.testing.assert_array_equal(curve.ci_low, curve.mean)


class TestMetricsRecord:
    def test_json_round_trip(self):
        rec = MetricsRecord(3, 64, 0.78, 11, 12.5)
        assert MetricsRecord.from_json(rec.to_json()) == rec

    def test_wall_time_excluded_for_results_files(self):
        rec = MetricsRecord(3, 64, 0.78, 11, 12.5)
        assert "wall_time_ms" not in rec.to_json(include_wall_time=False)

    def test_prauc_none_survives(self):
        rec = MetricsRecord(0, 4, None, 1)
        assert MetricsRecord.from_json(rec.to_json()).prauc is None

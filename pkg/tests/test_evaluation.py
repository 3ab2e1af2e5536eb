"""Classification, sequence and ranking metrics with exact hand-computed oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paperrec.evaluation import (
    LogisticProbe,
    ctr,
    f1_scores,
    kfold_probe,
    merge_reports,
    mrr_at_k,
    precision_at_k,
    ranking_report,
    recall_at_k,
    sequence_metrics,
    tfidf_features,
)


class TestF1Scores:
    def test_perfect_predictions(self):
        assert f1_scores([0, 1, 2], [0, 1, 2], 3) == (1.0, 1.0)

    def test_binary_confusion_hand_calc(self):
        # Class 1 has TP=1, FP=1, FN=1 (and one true negative); summing the
        # two per-class confusions gives micro F1 = 4/8 = 0.5.
        micro, macro = f1_scores([1, 1, 0, 0], [1, 0, 1, 0], 2)
        assert micro == pytest.approx(0.5, abs=1e-12)
        assert macro == pytest.approx(0.5, abs=1e-12)

    def test_single_class_predictions_on_balanced_data(self):
        micro, macro = f1_scores([0, 0, 0, 0], [0, 1, 0, 1], 2)
        assert micro == pytest.approx(0.5, abs=1e-12)
        assert macro == pytest.approx((2 * 2 / 6) / 2, abs=1e-12)
        assert macro < micro

    def test_absent_classes_zero_in_macro(self):
        micro, macro = f1_scores([0, 0], [0, 0], 4)
        assert micro == 1.0
        assert macro == pytest.approx(0.25, abs=1e-12)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=100)
    def test_micro_equals_accuracy_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 40))
        k = int(rng.integers(2, 6))
        labels = rng.integers(0, k, n)
        preds = rng.integers(0, k, n)
        micro, _ = f1_scores(preds, labels, k)
        assert micro == pytest.approx(float(np.mean(preds == labels)), abs=1e-12)


class TestProbe:
    def test_tfidf_rows_unit_norm(self, tiny_bow):
        x = tfidf_features(tiny_bow)
        norms = np.linalg.norm(x, axis=1)
        assert np.allclose(norms[norms > 0], 1.0, atol=1e-12)
        assert x.shape == (tiny_bow.num_documents, len(tiny_bow.dictionary))

    def test_leaked_feature_reaches_ceiling(self):
        rng = np.random.default_rng(0)
        n, k = 120, 4
        labels = rng.integers(0, k, n)
        leak = np.zeros((n, k))
        leak[np.arange(n), labels] = 1.0
        x = np.hstack([leak, rng.random((n, 6)) * 0.05])
        report = kfold_probe(x, labels, k, folds=5, seed=0)
        assert report.f1_micro > 0.99

    def test_fold_sizes_differ_by_at_most_one(self):
        rng = np.random.default_rng(1)
        x = rng.random((23, 5))
        y = rng.integers(0, 3, 23)
        report = kfold_probe(x, y, 3, folds=5, seed=1)
        assert report.folds == 5
        assert len(report.per_fold_micro) == 5
        sizes = [len(chunk) for chunk in np.array_split(np.arange(23), 5)]
        assert max(sizes) - min(sizes) <= 1

    def test_random_labels_macro_band(self):
        # Monte-Carlo over seeds: with unpredictable labels the held-out
        # macro F1 sits near the 4-class chance level.
        values = []
        for seed in range(6):
            rng = np.random.default_rng(seed)
            x = rng.random((200, 30))
            y = rng.integers(0, 4, 200)
            values.append(kfold_probe(x, y, 4, folds=5, seed=seed).f1_macro)
        assert 0.15 < float(np.mean(values)) < 0.35

    def test_split_depends_only_on_seed(self):
        rng = np.random.default_rng(2)
        x = rng.random((40, 6))
        y1 = rng.integers(0, 2, 40)
        y2 = 1 - y1
        a = kfold_probe(x, y1, 2, folds=4, seed=9)
        b = kfold_probe(x, y2, 2, folds=4, seed=9)
        # Complementary labelings on identical folds give identical scores.
        assert a.per_fold_micro == b.per_fold_micro

    def test_probe_requires_fit(self):
        with pytest.raises(ValueError):
            LogisticProbe(2).predict(np.zeros((1, 2)))


class TestSequenceMetrics:
    def test_perfect_one_hot(self):
        dists = np.array([[1.0, 0.0], [0.0, 1.0]])
        rep = sequence_metrics(dists, [0, 1], split="train")
        assert rep.accuracy == 1.0
        assert rep.rmse == 0.0
        assert rep.split == "train"

    def test_uniform_binary_rmse_half(self):
        dists = np.full((4, 2), 0.5)
        rep = sequence_metrics(dists, [0, 1, 0, 1])
        assert rep.rmse == pytest.approx(0.5, abs=1e-12)

    def test_accuracy_bounded(self):
        rng = np.random.default_rng(3)
        dists = rng.random((10, 3))
        dists /= dists.sum(axis=1, keepdims=True)
        rep = sequence_metrics(dists, rng.integers(0, 3, 10))
        assert 0.0 <= rep.accuracy <= 1.0


class TestRankingMetrics:
    def test_recall_three_of_five(self):
        assert recall_at_k([1, 2, 3, 4], {1, 2, 3, 8, 9}, 10) == pytest.approx(0.6)

    def test_recall_complete(self):
        assert recall_at_k([1, 2, 3], {1, 2}, 10) == 1.0

    def test_recall_empty_relevant_errors(self):
        with pytest.raises(ValueError):
            recall_at_k([1, 2], set(), 10)

    def test_precision_three_hits_at_ten(self):
        ranked = [1, 2, 3, 0, 0, 0, 0, 0, 0, 0]
        assert precision_at_k(ranked, {1, 2, 3}, 10) == pytest.approx(0.3)

    def test_precision_extremes(self):
        assert precision_at_k([5, 6], {1}, 2) == 0.0
        assert precision_at_k([1, 2], {1, 2}, 2) == 1.0

    def test_mrr_first_relevant_at_rank_two(self):
        assert mrr_at_k([9, 1, 2], {1}, 10) == 0.5

    def test_mrr_zero_beyond_k(self):
        ranked = list(range(10)) + [99]
        assert mrr_at_k(ranked, {99}, 10) == 0.0

    def test_mrr_rank_one(self):
        assert mrr_at_k([7, 8], {7}, 10) == 1.0

    def test_mrr_monotone_in_rank(self):
        values = [mrr_at_k([0] * pos + [42], {42}, 10) for pos in range(12)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_ctr_values(self):
        assert ctr(0, 10) == 0.0
        assert ctr(10, 10) == 1.0
        assert ctr(3, 10) == pytest.approx(0.3)
        with pytest.raises(ValueError):
            ctr(1, 0)

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=100)
    def test_precision_recall_hit_identity(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 12))
        recommended = rng.permutation(30)[: rng.integers(1, 20)].tolist()
        relevant = set(rng.permutation(30)[: rng.integers(1, 10)].tolist())
        hits = len(set(recommended[:k]) & relevant)
        assert precision_at_k(recommended, relevant, k) * k == pytest.approx(hits)
        assert recall_at_k(recommended, relevant, k) * len(relevant) == pytest.approx(hits)

    def test_report_query_order_invariant(self):
        queries = [
            {"recommended": [1, 2, 3], "relevant": [2], "clicked": [2]},
            {"recommended": [9, 8], "relevant": [8, 7], "clicked": []},
            {"recommended": [5], "relevant": [5], "clicked": [5]},
        ]
        a = ranking_report(queries, k=3)
        b = ranking_report(list(reversed(queries)), k=3)
        assert a == b


class TestMergeReports:
    def test_rows_sorted_and_flattened(self):
        reports = [
            {"pipeline": "lstm", "metrics": [
                {"metric": "accuracy", "value": 0.9, "split": "test"},
                {"metric": "accuracy", "value": 0.95, "split": "train"}]},
            {"pipeline": "fpm", "metrics": [
                {"metric": "accuracy", "value": 0.4, "split": "test"}]},
        ]
        rows = merge_reports(reports)
        assert rows == [
            {"metric": "accuracy", "value": 0.4, "split": "test", "pipeline": "fpm"},
            {"metric": "accuracy", "value": 0.9, "split": "test", "pipeline": "lstm"},
            {"metric": "accuracy", "value": 0.95, "split": "train", "pipeline": "lstm"},
        ]

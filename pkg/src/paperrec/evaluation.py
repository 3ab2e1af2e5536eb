"""Quantitative evaluation: classification probe, sequence and ranking metrics.

The classification probe is a multinomial logistic regression trained by
plain gradient descent on TF-IDF title vectors; it measures how learnable
a topic labelling is, so two labelling pipelines can be compared on equal
footing with identical fold splits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BowCorpus
from .intent import (
    InteractionEvent,
    IntentModel,
    MarkovPredictor,
    FpmPredictor,
    _forward_batch,
    prepare_windows,
    topic_sequences_split,
)


@dataclass(frozen=True)
class ClassificationReport:
    f1_micro: float
    f1_macro: float
    accuracy: float
    per_fold_micro: tuple[float, ...]
    per_fold_macro: tuple[float, ...]
    folds: int


@dataclass(frozen=True)
class SequenceReport:
    split: str
    accuracy: float
    rmse: float
    count: int


@dataclass(frozen=True)
class RankingReport:
    recall_at_k: float
    precision_at_k: float
    mrr_at_k: float
    ctr: float
    k: int


def f1_scores(predictions: Sequence[int], labels: Sequence[int],
              num_classes: int) -> tuple[float, float]:
    """Micro and macro F1 for single-label multi-class predictions.

    Classes absent from both predictions and labels contribute an F1 of
    zero to the macro average.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have the same length")
    tp = np.zeros(num_classes)
    fp = np.zeros(num_classes)
    fn = np.zeros(num_classes)
    for c in range(num_classes):
        tp[c] = np.sum((predictions == c) & (labels == c))
        fp[c] = np.sum((predictions == c) & (labels != c))
        fn[c] = np.sum((predictions != c) & (labels == c))
    micro_den = 2 * tp.sum() + fp.sum() + fn.sum()
    f1_micro = float(2 * tp.sum() / micro_den) if micro_den > 0 else 0.0
    per_class = np.zeros(num_classes)
    for c in range(num_classes):
        den = 2 * tp[c] + fp[c] + fn[c]
        per_class[c] = 2 * tp[c] / den if den > 0 else 0.0
    return f1_micro, float(per_class.mean())


def tfidf_features(corpus: BowCorpus) -> np.ndarray:
    """L2-normalized TF-IDF matrix over the corpus dictionary.

    idf = ln((1 + m) / (1 + df)) + 1, so words in every document still get
    positive weight.
    """
    m = corpus.num_documents
    v = len(corpus.dictionary)
    tf = np.zeros((m, v))
    for d, bow in enumerate(corpus.bows):
        for w, c in bow.items():
            tf[d, w] = c
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + m) / (1.0 + df)) + 1.0
    x = tf * idf
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


class LogisticProbe:
    """Multinomial logistic regression, L2-regularized, fixed-step gradient descent."""

    def __init__(self, num_classes: int, iterations: int = 200,
                 learning_rate: float = 1.0, l2: float = 1e-4):
        self.num_classes = num_classes
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.l2 = l2
        self.weights: np.ndarray | None = None
        self.bias: np.ndarray | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LogisticProbe":
        n, d = x.shape
        w = np.zeros((self.num_classes, d))
        b = np.zeros(self.num_classes)
        onehot = np.zeros((n, self.num_classes))
        onehot[np.arange(n), y] = 1.0
        for _ in range(self.iterations):
            logits = x @ w.T + b
            logits -= logits.max(axis=1, keepdims=True)
            e = np.exp(logits)
            p = e / e.sum(axis=1, keepdims=True)
            g = (p - onehot) / n
            w -= self.learning_rate * (g.T @ x + self.l2 * w)
            b -= self.learning_rate * g.sum(axis=0)
        self.weights, self.bias = w, b
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ValueError("probe is not fitted")
        return np.argmax(x @ self.weights.T + self.bias, axis=1)


def kfold_probe(features: np.ndarray, labels: Sequence[int], num_classes: int,
                folds: int = 5, seed: int = 0) -> ClassificationReport:
    """Mean held-out F1 of the probe over a seed-deterministic k-fold split.

    The split depends only on (n, folds, seed), so two labelings of the
    same documents are probed on identical folds.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = features.shape[0]
    if labels.shape[0] != n:
        raise ValueError("one label per feature row required")
    if n < folds:
        raise ValueError(f"need at least {folds} samples for {folds}-fold validation")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    fold_indices = np.array_split(order, folds)
    micros, macros, accs = [], [], []
    for held in fold_indices:
        mask = np.ones(n, dtype=bool)
        mask[held] = False
        probe = LogisticProbe(num_classes).fit(features[mask], labels[mask])
        pred = probe.predict(features[held])
        micro, macro = f1_scores(pred, labels[held], num_classes)
        micros.append(micro)
        macros.append(macro)
        accs.append(float(np.mean(pred == labels[held])))
    return ClassificationReport(
        f1_micro=float(np.mean(micros)),
        f1_macro=float(np.mean(macros)),
        accuracy=float(np.mean(accs)),
        per_fold_micro=tuple(micros),
        per_fold_macro=tuple(macros),
        folds=folds,
    )


def sequence_metrics(distributions: np.ndarray, true_topics: Sequence[int],
                     split: str = "test") -> SequenceReport:
    """Argmax accuracy and RMSE of predicted distributions against one-hots."""
    true_topics = np.asarray(true_topics, dtype=np.int64)
    distributions = np.asarray(distributions, dtype=np.float64)
    n, k = distributions.shape
    if true_topics.shape[0] != n:
        raise ValueError("one true topic per distribution required")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), true_topics] = 1.0
    accuracy = float(np.mean(np.argmax(distributions, axis=1) == true_topics)) if n else 0.0
    rmse = float(np.sqrt(np.mean((distributions - onehot) ** 2))) if n else 0.0
    return SequenceReport(split=split, accuracy=accuracy, rmse=rmse, count=n)


def recall_at_k(recommended: Sequence, relevant: set, k: int) -> float:
    if not relevant:
        raise ValueError("relevant set is empty; recall is undefined")
    hits = sum(1 for item in recommended[:k] if item in relevant)
    return hits / len(relevant)


def precision_at_k(recommended: Sequence, relevant: set, k: int) -> float:
    if k <= 0:
        raise ValueError("k must be positive")
    hits = sum(1 for item in recommended[:k] if item in relevant)
    return hits / k


def mrr_at_k(recommended: Sequence, relevant: set, k: int) -> float:
    """Reciprocal rank of the first relevant item, zero when it falls
    outside the top k."""
    for rank, item in enumerate(recommended[:k], start=1):
        if item in relevant:
            return 1.0 / rank
    return 0.0


def ctr(clicked: int, shown: int) -> float:
    if shown <= 0:
        raise ValueError("shown count must be positive")
    if not 0 <= clicked <= shown:
        raise ValueError("clicked count must be between 0 and shown")
    return clicked / shown


def ranking_report(queries: Sequence[dict], k: int = 10) -> RankingReport:
    """Aggregate ranking metrics over queries.

    Each query is {"recommended": [...], "relevant": [...], "clicked": [...]};
    recall/precision/MRR are averaged per query, CTR pools clicks over all
    shown items.
    """
    if not queries:
        raise ValueError("no queries to evaluate")
    recalls, precisions, rrs = [], [], []
    total_clicked = total_shown = 0
    for q in queries:
        recommended = list(q["recommended"])
        relevant = set(q["relevant"])
        clicked = set(q.get("clicked", []))
        recalls.append(recall_at_k(recommended, relevant, k))
        precisions.append(precision_at_k(recommended, relevant, k))
        rrs.append(mrr_at_k(recommended, relevant, k))
        shown = recommended[:k]
        total_shown += len(shown)
        total_clicked += sum(1 for item in shown if item in clicked)
    return RankingReport(
        recall_at_k=float(np.mean(recalls)),
        precision_at_k=float(np.mean(precisions)),
        mrr_at_k=float(np.mean(rrs)),
        ctr=ctr(total_clicked, total_shown) if total_shown else 0.0,
        k=k,
    )


def evaluate_sequence_model(model: IntentModel, events: Sequence[InteractionEvent],
                            train_fraction: float = 0.75) -> dict[str, SequenceReport]:
    """Accuracy and RMSE of the trained predictor on both splits."""
    config = model.config
    train_windows, test_windows, _ = prepare_windows(
        events, config, train_fraction=train_fraction, norm=model.norm)
    out = {}
    for split, windows in (("train", train_windows), ("test", test_windows)):
        if not windows:
            out[split] = SequenceReport(split=split, accuracy=0.0, rmse=0.0, count=0)
            continue
        x = np.stack([w.inputs for w in windows])
        y = [w.target for w in windows]
        probs, _, _ = _forward_batch(model.params, x)
        out[split] = sequence_metrics(probs, y, split=split)
    return out


def evaluate_markov(predictor: MarkovPredictor, events: Sequence[InteractionEvent],
                    train_fraction: float = 0.75) -> dict[str, SequenceReport]:
    """Teacher-forced evaluation: each step is predicted from the previous
    true topic."""
    _, full_seqs, cuts = topic_sequences_split(events, train_fraction)
    out = {}
    for split in ("train", "test"):
        dists, truths = [], []
        for user, seq in full_seqs.items():
            cut = cuts[user]
            steps = range(1, cut) if split == "train" else range(max(cut, 1), len(seq))
            for i in steps:
                dists.append(predictor.distribution(seq[i - 1]))
                truths.append(seq[i])
        out[split] = (sequence_metrics(np.array(dists), truths, split=split)
                      if dists else SequenceReport(split, 0.0, 0.0, 0))
    return out


def evaluate_fpm(predictor: FpmPredictor, events: Sequence[InteractionEvent],
                 train_fraction: float = 0.75) -> dict[str, SequenceReport]:
    _, full_seqs, cuts = topic_sequences_split(events, train_fraction)
    out = {}
    for split in ("train", "test"):
        dists, truths = [], []
        for user, seq in full_seqs.items():
            cut = cuts[user]
            steps = range(1, cut) if split == "train" else range(max(cut, 1), len(seq))
            for i in steps:
                dists.append(predictor.distribution(seq[:i]))
                truths.append(seq[i])
        out[split] = (sequence_metrics(np.array(dists), truths, split=split)
                      if dists else SequenceReport(split, 0.0, 0.0, 0))
    return out


def merge_reports(stage_reports: Sequence[dict]) -> list[dict]:
    """Flatten stage report payloads into comparison-table rows.

    Input items look like {"pipeline": name, "metrics": [{"metric", "value",
    "split"}, ...]}; rows come back sorted by (pipeline, metric, split).
    """
    rows = []
    for report in stage_reports:
        pipeline = report["pipeline"]
        for item in report["metrics"]:
            rows.append({
                "metric": item["metric"],
                "value": float(item["value"]),
                "split": item.get("split", ""),
                "pipeline": pipeline,
            })
    rows.sort(key=lambda r: (r["pipeline"], r["metric"], r["split"]))
    return rows

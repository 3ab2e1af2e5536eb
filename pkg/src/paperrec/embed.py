"""Skip-gram word embeddings trained with the exact softmax objective.

A two-layer linear network: the input row for the target word is copied to
the hidden layer (no activation) and scored against every output column,
normalized by softmax. The corpus here is small enough that the full
softmax is affordable, so no sampling approximation is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import Dictionary, TokenizedDocument


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 200
    window: int = 6
    min_count: int = 1
    epochs: int = 5
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class TrainingPair(NamedTuple):
    target: int
    context: int


class EmbeddingModel:
    """Input vectors (the embeddings) plus optional output weights.

    Models reloaded from the vectors-only file format have no output
    weights; similarity queries still work but forward/loss do not.
    """

    def __init__(self, dictionary: Dictionary, input_vectors: np.ndarray,
                 output_weights: np.ndarray | None = None):
        if input_vectors.shape[0] != len(dictionary):
            raise ValueError("input_vectors row count must equal vocabulary size")
        if output_weights is not None and output_weights.shape != (
                input_vectors.shape[1], input_vectors.shape[0]):
            raise ValueError("output_weights must be (dim, vocab)")
        self.dictionary = dictionary
        self.input_vectors = input_vectors
        self.output_weights = output_weights

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.input_vectors.shape[0]

    def vector(self, word: int) -> np.ndarray:
        return self.input_vectors[word]

    def to_payload(self) -> dict:
        return {
            "format": "sgns/1",
            "dim": self.dim,
            "vectors": {
                self.dictionary.token(i): [float(x) for x in self.input_vectors[i]]
                for i in range(self.vocab_size)
            },
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "EmbeddingModel":
        if payload.get("format") != "sgns/1":
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        tokens = sorted(payload["vectors"])
        vectors = np.array([payload["vectors"][t] for t in tokens], dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] != int(payload["dim"]):
            raise ValueError("vector rows inconsistent with declared dim")
        return cls(Dictionary(tokens, min_count=0), vectors)


def one_hot(index: int, size: int) -> np.ndarray:
    if not 0 <= index < size:
        raise ValueError(f"index {index} out of range for size {size}")
    vec = np.zeros(size, dtype=np.float64)
    vec[index] = 1.0
    return vec


def generate_pairs(docs: Sequence[TokenizedDocument], dictionary: Dictionary,
                   window: int, min_count: int = 1) -> list[TrainingPair]:
    """Target/context index pairs within the window, in deterministic order.

    Tokens that are out of vocabulary (or below min_count) are removed from
    the sequence first, so windows span them.
    """
    if min_count > 1 and not dictionary.frequencies:
        raise ValueError("min_count > 1 requires a dictionary with frequency data")
    pairs: list[TrainingPair] = []
    for doc in docs:
        idxs = [
            dictionary.index(t) for t in doc.tokens
            if t in dictionary and (min_count <= 1 or dictionary.frequency(t) >= min_count)
        ]
        n = len(idxs)
        for t in range(n):
            for d in range(-window, window + 1):
                c = t + d
                if d != 0 and 0 <= c < n:
                    pairs.append(TrainingPair(idxs[t], idxs[c]))
    return pairs


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def forward(model: EmbeddingModel, target: int) -> np.ndarray:
    """Probability of every word appearing in the target word's context."""
    if model.output_weights is None:
        raise ValueError("model has no output weights (loaded from vectors-only file)")
    return _softmax(model.input_vectors[target] @ model.output_weights)


def loss_and_grad(model: EmbeddingModel,
                  batch: Sequence[TrainingPair]) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Summed negative log-likelihood over the batch and its exact gradients."""
    if model.output_weights is None:
        raise ValueError("model has no output weights (loaded from vectors-only file)")
    w1, w2 = model.input_vectors, model.output_weights
    grad_w1 = np.zeros_like(w1)
    grad_w2 = np.zeros_like(w2)
    loss = 0.0
    for target, context in batch:
        h = w1[target]
        p = _softmax(h @ w2)
        loss -= float(np.log(p[context]))
        dscores = p.copy()
        dscores[context] -= 1.0
        grad_w2 += np.outer(h, dscores)
        grad_w1[target] += w2 @ dscores
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite skip-gram loss: {loss}")
    return loss, (grad_w1, grad_w2)


def train(docs: Sequence[TokenizedDocument], dictionary: Dictionary,
          config: SkipGramConfig) -> EmbeddingModel:
    """Stochastic gradient descent over shuffled pairs, one pair at a time."""
    rng = np.random.default_rng(config.seed)
    v, n = len(dictionary), config.dim
    w1 = (rng.random((v, n)) - 0.5) / n
    w2 = np.zeros((n, v))
    pairs = generate_pairs(docs, dictionary, config.window, config.min_count)
    lr = config.learning_rate
    for _ in range(config.epochs):
        for i in rng.permutation(len(pairs)):
            target, context = pairs[i]
            h = w1[target]
            p = _softmax(h @ w2)
            p[context] -= 1.0
            grad_h = w2 @ p
            w2 -= lr * np.outer(h, p)
            w1[target] -= lr * grad_h
        if not np.isfinite(w1).all() or not np.isfinite(w2).all():
            raise TrainingDivergedError("non-finite weights after epoch")
    return EmbeddingModel(dictionary, w1, w2)


def cosine_similarity(model: EmbeddingModel, w1: int, w2: int) -> float:
    a, b = model.input_vectors[w1], model.input_vectors[w2]
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def nearest(model: EmbeddingModel, word: int, n: int) -> list[tuple[int, float]]:
    """Top-n other words by cosine similarity, ties broken by word index."""
    if n <= 0:
        return []
    sims = np.array([cosine_similarity(model, word, other)
                     for other in range(model.vocab_size)])
    order = np.lexsort((np.arange(sims.size), -sims))
    out = [(int(i), float(sims[i])) for i in order if int(i) != word]
    return out[:n]


def embedding_csv_rows(model: EmbeddingModel) -> list[list[str]]:
    """Plot-ready rows: header then one row per word with its coordinates."""
    header = ["word"] + [f"v{i + 1}" for i in range(model.dim)]
    rows = [header]
    for i in range(model.vocab_size):
        rows.append([model.dictionary.token(i)]
                    + [repr(float(x)) for x in model.input_vectors[i]])
    return rows

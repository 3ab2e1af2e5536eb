"""Latent Dirichlet allocation trained by collapsed Gibbs sampling.

Titles are short, so the sampler keeps explicit per-token assignments and
two count matrices: word-by-topic and title-by-topic. The full conditional
for reassigning one token multiplies the smoothed word-topic proportion by
the smoothed title-topic proportion, with the token itself excluded from
both counts before evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .corpus import BowCorpus, Dictionary


@dataclass(frozen=True)
class LdaConfig:
    k: int
    alpha: float | None = None  # None means the 50/k convention
    beta: float = 0.01
    iterations: int = 200
    burn_in: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("require iterations > burn_in >= 0")

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.k


@dataclass(frozen=True)
class TopicWordDistribution:
    """Row-stochastic (k, V) matrix: probability of each word under each topic."""
    tau: np.ndarray


@dataclass(frozen=True)
class DocTopicDistribution:
    """Row-stochastic (m, k) matrix: topic mix of each title."""
    theta: np.ndarray


class LdaState:
    """Mutable sampler state: assignments plus consistent count matrices."""

    def __init__(self, corpus: BowCorpus, config: LdaConfig,
                 rng: np.random.Generator):
        self.dictionary: Dictionary = corpus.dictionary
        self.config = config
        self.rng = rng
        # Expand each sparse bag into a flat token-index array (index order);
        # LDA is exchangeable within a document so the order is immaterial.
        self.docs: list[np.ndarray] = [
            np.repeat(np.fromiter(bow.keys(), dtype=np.int64, count=len(bow)),
                      np.fromiter(bow.values(), dtype=np.int64, count=len(bow)))
            if bow else np.empty(0, dtype=np.int64)
            for bow in corpus.bows
        ]
        k = config.k
        v = len(self.dictionary)
        self.z: list[np.ndarray] = [np.zeros(len(d), dtype=np.int64) for d in self.docs]
        self.word_topic = np.zeros((v, k), dtype=np.int64)
        self.doc_topic = np.zeros((len(self.docs), k), dtype=np.int64)
        self.topic_totals = np.zeros(k, dtype=np.int64)

    @property
    def num_documents(self) -> int:
        return len(self.docs)

    @property
    def vocab_size(self) -> int:
        return len(self.dictionary)

    def _add(self, doc: int, pos: int, topic: int) -> None:
        w = self.docs[doc][pos]
        self.z[doc][pos] = topic
        self.word_topic[w, topic] += 1
        self.doc_topic[doc, topic] += 1
        self.topic_totals[topic] += 1

    def _remove(self, doc: int, pos: int) -> None:
        w = self.docs[doc][pos]
        topic = self.z[doc][pos]
        self.word_topic[w, topic] -= 1
        self.doc_topic[doc, topic] -= 1
        self.topic_totals[topic] -= 1


def init_assignments(corpus: BowCorpus, config: LdaConfig,
                     rng: np.random.Generator | None = None) -> LdaState:
    """Assign every token occurrence a uniform-random topic and build counts."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    state = LdaState(corpus, config, rng)
    for d, doc in enumerate(state.docs):
        topics = rng.integers(0, config.k, size=len(doc))
        for pos, topic in enumerate(topics):
            state._add(d, pos, int(topic))
    return state


def conditional(state: LdaState, doc: int, pos: int) -> np.ndarray:
    """Full conditional over topics for the token at (doc, pos).

    The counts must already exclude that token (caller decrements first).
    Proportional to the smoothed word-topic share times the smoothed
    title-topic share; returned normalized.
    """
    w = state.docs[doc][pos]
    cfg = state.config
    if state.word_topic[w].min() < 0 or state.doc_topic[doc].min() < 0:
        raise ValueError("negative counts: sampler state is corrupted")
    v = state.vocab_size
    word_part = (state.word_topic[w] + cfg.beta) / (state.topic_totals + v * cfg.beta)
    alpha = cfg.effective_alpha
    doc_row = state.doc_topic[doc]
    doc_part = (doc_row + alpha) / (doc_row.sum() + cfg.k * alpha)
    p = word_part * doc_part
    return p / p.sum()


def gibbs_sweep(state: LdaState, rng: np.random.Generator | None = None) -> LdaState:
    """Resample every token exactly once from its full conditional."""
    rng = rng if rng is not None else state.rng
    for d in range(state.num_documents):
        for pos in range(len(state.docs[d])):
            state._remove(d, pos)
            p = conditional(state, d, pos)
            u = rng.random()
            topic = int(np.searchsorted(np.cumsum(p), u, side="right"))
            if topic >= state.config.k:  # float round-off at the top edge
                topic = state.config.k - 1
            state._add(d, pos, topic)
    return state


def train_lda(corpus: BowCorpus, config: LdaConfig) -> LdaState:
    """Initialize and run the configured number of Gibbs sweeps."""
    state = init_assignments(corpus, config)
    for _ in range(config.iterations):
        gibbs_sweep(state)
    return state


def estimate_tau(state: LdaState) -> TopicWordDistribution:
    """Posterior word probabilities per topic (smoothed by beta)."""
    cfg = state.config
    tau = (state.word_topic.T + cfg.beta) / (
        state.topic_totals[:, None] + state.vocab_size * cfg.beta
    )
    return TopicWordDistribution(tau=tau)


def estimate_theta(state: LdaState) -> DocTopicDistribution:
    """Posterior topic probabilities per title (smoothed by alpha)."""
    cfg = state.config
    alpha = cfg.effective_alpha
    doc_lengths = state.doc_topic.sum(axis=1, keepdims=True)
    theta = (state.doc_topic + alpha) / (doc_lengths + cfg.k * alpha)
    return DocTopicDistribution(theta=theta)


def top_words(tau: TopicWordDistribution, topic: int, n: int) -> list[int]:
    """Indices of the n most probable words for a topic, ties by word index."""
    row = tau.tau[topic]
    order = np.lexsort((np.arange(row.size), -row))
    return [int(i) for i in order[: max(0, min(n, row.size))]]


@dataclass(frozen=True)
class CoherenceResult:
    per_topic: np.ndarray
    mean: float
    degenerate: tuple[int, ...]  # topics whose top words never occur in the corpus


def coherence(tau: TopicWordDistribution, corpus: BowCorpus,
              top_n: int = 10) -> CoherenceResult:
    """Intrinsic coherence from document co-occurrence of each topic's top words.

    For the ranked top words w_1..w_n of a topic the score is
    sum over pairs i < j of log((codoc(w_i, w_j) + 1) / docfreq(w_j)).
    A topic whose top words include one that never occurs in the corpus has
    an undefined denominator; it scores -inf and is reported as degenerate.
    """
    doc_sets = [frozenset(bow) for bow in corpus.bows]
    k = tau.tau.shape[0]
    scores = np.zeros(k)
    degenerate: list[int] = []
    for topic in range(k):
        words = top_words(tau, topic, top_n)
        presence = np.array([[w in ds for ds in doc_sets] for w in words], dtype=bool)
        doc_freq = presence.sum(axis=1)
        if (doc_freq[: len(words)] == 0).any():
            scores[topic] = -np.inf
            degenerate.append(topic)
            continue
        total = 0.0
        for i in range(len(words)):
            for j in range(i + 1, len(words)):
                codoc = int(np.logical_and(presence[i], presence[j]).sum())
                total += float(np.log((codoc + 1) / doc_freq[j]))
        scores[topic] = total
    mean = float(scores.mean())
    return CoherenceResult(per_topic=scores, mean=mean, degenerate=tuple(degenerate))


def select_k(corpus: BowCorpus, k_candidates: Sequence[int], config: LdaConfig,
             top_n: int = 10) -> tuple[int, list[float]]:
    """Train one model per candidate k (same seed) and pick the most coherent.

    Returns the winning k and the mean coherence per candidate, in input
    order. Ties go to the smaller k.
    """
    if not k_candidates:
        raise ValueError("k_candidates must be non-empty")
    scores: list[float] = []
    for k in k_candidates:
        cfg = replace(config, k=k)
        state = train_lda(corpus, cfg)
        scores.append(coherence(estimate_tau(state), corpus, top_n=top_n).mean)
    best_k = None
    best_score = -np.inf
    for k, score in zip(k_candidates, scores):
        if score > best_score or (score == best_score and best_k is not None and k < best_k):
            best_k, best_score = k, score
    return int(best_k), scores


def lda_model_payload(config: LdaConfig, tau: TopicWordDistribution,
                      dictionary: Dictionary) -> dict:
    return {
        "format": "lda/1",
        "k": config.k,
        "alpha": config.effective_alpha,
        "beta": config.beta,
        "tau": [[float(x) for x in row] for row in tau.tau],
        "dictionary": dictionary.to_payload(),
    }


def load_lda_model(payload: dict) -> tuple[TopicWordDistribution, Dictionary, dict]:
    """Inverse of lda_model_payload; returns (tau, dictionary, hyperparameters)."""
    if payload.get("format") != "lda/1":
        raise ValueError(f"unsupported model format: {payload.get('format')!r}")
    tau = TopicWordDistribution(tau=np.asarray(payload["tau"], dtype=np.float64))
    dictionary = Dictionary.from_payload(payload["dictionary"])
    if tau.tau.shape != (int(payload["k"]), len(dictionary)):
        raise ValueError("tau shape inconsistent with k and vocabulary size")
    hyper = {"k": int(payload["k"]), "alpha": float(payload["alpha"]),
             "beta": float(payload["beta"])}
    return tau, dictionary, hyper

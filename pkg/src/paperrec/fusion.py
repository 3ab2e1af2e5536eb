"""Fuse topic-model word probabilities with embedding neighborhoods.

Each topic's strongest words seed an expansion through the embedding's
nearest neighbors; neighbors that clear the similarity threshold inherit
the seed's topic with a similarity-weighted score. The result is a dense
word-to-topic score table that degenerates to the plain topic model when
expansion is disabled, which is what makes the two pipelines directly
comparable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Dictionary, TokenizedDocument
from .embed import EmbeddingModel, nearest
from .lda import TopicWordDistribution, top_words

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FusionConfig:
    seeds_per_topic: int = 2
    neighbors_per_seed: int = 6
    similarity_threshold: float = 0.4

    def __post_init__(self):
        if self.seeds_per_topic < 1:
            raise ValueError("seeds_per_topic must be >= 1")
        if self.neighbors_per_seed < 0:
            raise ValueError("neighbors_per_seed must be >= 0")


class WordTopicMap:
    """Dense word -> (topic, score) table keyed by token string."""

    def __init__(self, tokens: Sequence[str], scores: np.ndarray):
        if scores.shape[0] != len(tokens):
            raise ValueError("one score row per token required")
        self.tokens = list(tokens)
        self.scores = scores
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def num_topics(self) -> int:
        return self.scores.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def row(self, token: str) -> np.ndarray | None:
        i = self._index.get(token)
        return None if i is None else self.scores[i]

    def entries(self, token: str) -> list[tuple[int, float]]:
        row = self.row(token)
        if row is None:
            return []
        return [(j, float(row[j])) for j in range(row.size)]

    def to_payload(self) -> dict:
        return {
            "format": "m2/1",
            "entries": {
                t: [[j, float(self.scores[i, j])] for j in range(self.num_topics)]
                for i, t in enumerate(self.tokens)
            },
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "WordTopicMap":
        if payload.get("format") != "m2/1":
            raise ValueError(f"unsupported map format: {payload.get('format')!r}")
        entries = payload["entries"]
        tokens = sorted(entries)
        if not tokens:
            raise ValueError("empty word-topic map")
        k = 1 + max(int(j) for pairs in entries.values() for j, _ in pairs)
        scores = np.zeros((len(tokens), k))
        for i, t in enumerate(tokens):
            for j, prob in entries[t]:
                scores[i, int(j)] = float(prob)
        return cls(tokens, scores)


def seed_words(tau: TopicWordDistribution, m: int) -> list[list[int]]:
    """The m highest-probability word indices for every topic."""
    return [top_words(tau, topic, m) for topic in range(tau.tau.shape[0])]


def expand_and_filter(seed: str, topic: int, embedding: EmbeddingModel,
                      config: FusionConfig) -> list[tuple[str, float]]:
    """Embedding neighbors of a seed word that clear the similarity threshold.

    Survivors carry the seed's topic. A seed missing from the embedding
    vocabulary expands to nothing (logged, not raised).
    """
    if seed not in embedding.dictionary:
        logger.warning("seed word %r (topic %d) not in embedding vocabulary", seed, topic)
        return []
    idx = embedding.dictionary.index(seed)
    out = []
    for nbr, sim in nearest(embedding, idx, config.neighbors_per_seed):
        if sim >= config.similarity_threshold:
            out.append((embedding.dictionary.token(nbr), sim))
    return out


def build_word_topic_map(tau: TopicWordDistribution, dictionary: Dictionary,
                         embedding: EmbeddingModel, config: FusionConfig) -> WordTopicMap:
    """Start from the full topic-model distribution and overlay expansions.

    An expanded word's injected score for the seed's topic is
    similarity * score(topic, seed); conflicts keep the maximum, so the
    construction is order-independent and reduces exactly to the plain
    distribution when neighbors_per_seed is zero.
    """
    scores = tau.tau.T.copy()
    k = tau.tau.shape[0]
    for topic in range(k):
        for seed_idx in top_words(tau, topic, config.seeds_per_topic):
            seed_token = dictionary.token(seed_idx)
            seed_prob = float(tau.tau[topic, seed_idx])
            for nbr_token, sim in expand_and_filter(seed_token, topic, embedding, config):
                if nbr_token not in dictionary:
                    continue
                w = dictionary.index(nbr_token)
                scores[w, topic] = max(scores[w, topic], sim * seed_prob)
    return WordTopicMap(list(dictionary.tokens), scores)


@dataclass(frozen=True)
class DominantTopicDiagnostics:
    votes: tuple[int, ...]
    vote_weights: tuple[float, ...]
    considered: int
    skipped: int
    tie_broken: bool


def dominant_topic(tokens: Iterable[str],
                   m2: WordTopicMap) -> tuple[int | None, DominantTopicDiagnostics]:
    """Majority topic of a token list under the word-topic table.

    Every known token votes for its highest-scoring topic. The most
    frequent topic wins; a frequency tie is broken by the larger sum of the
    voting words' scores, then by the lower topic index. Returns None when
    no token is known.
    """
    k = m2.num_topics
    votes = np.zeros(k, dtype=np.int64)
    weights = np.zeros(k)
    considered = skipped = 0
    for token in tokens:
        row = m2.row(token)
        if row is None:
            skipped += 1
            continue
        considered += 1
        best = int(np.argmax(row))
        votes[best] += 1
        weights[best] += float(row[best])
    if considered == 0:
        diag = DominantTopicDiagnostics(tuple(votes), tuple(weights), 0, skipped, False)
        return None, diag
    tied = np.flatnonzero(votes == votes.max())
    tie_broken = len(tied) > 1
    winner = int(tied[int(np.argmax(weights[tied]))]) if tie_broken else int(tied[0])
    diag = DominantTopicDiagnostics(tuple(int(x) for x in votes),
                                    tuple(float(x) for x in weights),
                                    considered, skipped, tie_broken)
    return winner, diag


def assign_corpus(docs: Sequence[TokenizedDocument],
                  m2: WordTopicMap) -> list[tuple[str, int | None]]:
    """Dominant topic per document; None marks unassignable documents."""
    return [(doc.doc_id, dominant_topic(doc.tokens, m2)[0]) for doc in docs]

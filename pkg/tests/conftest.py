"""Shared corpus builders for the test suite."""

import numpy as np
import pytest

from paperrec.corpus import BowCorpus, TokenizedDocument, build_dictionary

# Letters chosen so the Porter stemmer leaves generated words untouched:
# no suffix rule matches words built from these consonants/vowels with a
# trailing consonant, so the same vocabulary survives CLI preprocessing.
_CONSONANTS = "bdfgjkmpqvwxz"
_VOWELS = "aou"


def make_word(rng: np.random.Generator) -> str:
    n = int(rng.integers(2, 4))
    out = []
    for _ in range(n):
        out.append(_CONSONANTS[rng.integers(len(_CONSONANTS))])
        out.append(_VOWELS[rng.integers(len(_VOWELS))])
    out.append(_CONSONANTS[rng.integers(len(_CONSONANTS))])
    return "".join(out)


def make_vocab(rng: np.random.Generator, size: int) -> list[str]:
    words: set[str] = set()
    while len(words) < size:
        words.add(make_word(rng))
    return sorted(words)


def planted_corpus(k: int = 4, n_docs: int = 400, core_size: int = 12,
                   noise_size: int = 24, doc_len: int = 8,
                   noise_frac: float = 0.3, seed: int = 0):
    """Titles with disjoint per-topic core vocabularies plus shared noise.

    Returns (documents, planted topic labels). Documents cycle through the
    k topics so classes stay balanced.
    """
    rng = np.random.default_rng([seed, 77])
    vocab = make_vocab(rng, k * core_size + noise_size)
    cores = [vocab[t * core_size:(t + 1) * core_size] for t in range(k)]
    noise = vocab[k * core_size:]
    docs, labels = [], []
    for i in range(n_docs):
        t = i % k
        tokens = []
        for _ in range(doc_len):
            if rng.random() < noise_frac:
                tokens.append(noise[rng.integers(len(noise))])
            else:
                tokens.append(cores[t][rng.integers(len(cores[t]))])
        docs.append(TokenizedDocument(doc_id=f"d{i:04d}", tokens=tuple(tokens)))
        labels.append(t)
    return docs, labels


def random_corpus(rng: np.random.Generator, n_docs: int = 12,
                  vocab_size: int = 9, max_len: int = 7):
    vocab = make_vocab(rng, vocab_size)
    docs = []
    for i in range(n_docs):
        length = int(rng.integers(1, max_len + 1))
        tokens = tuple(vocab[rng.integers(vocab_size)] for _ in range(length))
        docs.append(TokenizedDocument(doc_id=f"r{i:03d}", tokens=tokens))
    return docs


@pytest.fixture
def tiny_bow() -> BowCorpus:
    docs = [
        TokenizedDocument("d1", ("deep", "learn", "imag")),
        TokenizedDocument("d2", ("network", "imag", "classif")),
        TokenizedDocument("d3", ("topic", "model", "text")),
        TokenizedDocument("d4", ("latent", "text", "topic")),
    ]
    dictionary = build_dictionary(docs, min_count=1)
    return BowCorpus.from_documents(docs, dictionary)

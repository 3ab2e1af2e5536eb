"""Title corpus ingestion: normalization, dictionary and bag-of-words building.

The preprocessing contract is deterministic end to end: a fixed stopword
list, a fixed tokenizer (lowercase ASCII alphabetic runs, minimum length
two) and Porter stemming applied until the token list is stable, so that
re-preprocessing any output reproduces it exactly.
"""

from __future__ import annotations

import csv
import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ._porter import stem
from ._stopwords import STOPWORDS

_TOKEN_RE = re.compile(r"[^\W\d_]+")
_MAX_STEM_PASSES = 8


class CorpusFormatError(ValueError):
    """Malformed corpus input (bad header, duplicate ids, empty titles)."""


class EmptyVocabularyError(ValueError):
    """No token survived the frequency filter."""


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    title: str


@dataclass(frozen=True)
class TokenizedDocument:
    doc_id: str
    tokens: tuple[str, ...]

    @property
    def empty(self) -> bool:
        return not self.tokens


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset[str] = STOPWORDS
    min_token_len: int = 2


def _normalize_pass(tokens: Iterable[str], config: PreprocessConfig) -> tuple[str, ...]:
    out = []
    for token in tokens:
        if len(token) < config.min_token_len or token in config.stopwords:
            continue
        out.append(stem(token))
    return tuple(out)


def preprocess(doc: RawDocument, config: PreprocessConfig | None = None) -> TokenizedDocument:
    """Tokenize and normalize a title.

    Lowercases, keeps ASCII alphabetic runs of length >= 2, drops stopwords
    and stems. Stemming plus refiltering is repeated until stable, which
    also removes stems that collapse onto a stopword. Documents that end up
    empty are returned with an empty token list rather than dropped, so the
    caller can flag them.
    """
    config = config or PreprocessConfig()
    raw = [t for t in _TOKEN_RE.findall(doc.title.lower()) if t.isascii()]
    tokens = _normalize_pass(raw, config)
    for _ in range(_MAX_STEM_PASSES):
        nxt = _normalize_pass(tokens, config)
        if nxt == tokens:
            break
        tokens = nxt
    return TokenizedDocument(doc_id=doc.doc_id, tokens=tokens)


class Dictionary:
    """Bijective token/index mapping with per-token corpus frequencies.

    Indices are dense in [0, V) and assigned in lexicographic token order,
    so two builds over identically ordered corpora are identical.
    """

    def __init__(self, tokens: Sequence[str], min_count: int,
                 frequencies: dict[str, int] | None = None):
        self.tokens: list[str] = list(tokens)
        self.min_count = min_count
        self.frequencies = dict(frequencies) if frequencies else {}
        self._index = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in dictionary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        return self._index[token]

    def token(self, index: int) -> str:
        return self.tokens[index]

    def frequency(self, token: str) -> int:
        return self.frequencies.get(token, 0)

    def to_payload(self) -> dict:
        return {"min_count": self.min_count, "tokens": list(self.tokens)}

    @classmethod
    def from_payload(cls, payload: dict) -> "Dictionary":
        return cls(payload["tokens"], int(payload["min_count"]))


def build_dictionary(docs: Sequence[TokenizedDocument], min_count: int = 1) -> Dictionary:
    """Construct the vocabulary over all tokens occurring >= min_count times."""
    if not any(doc.tokens for doc in docs):
        raise EmptyVocabularyError("no non-empty documents")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    retained = sorted(t for t, c in counts.items() if c >= min_count)
    if not retained:
        raise EmptyVocabularyError(
            f"no token reaches min_count={min_count} (vocabulary would be empty)"
        )
    return Dictionary(retained, min_count, {t: counts[t] for t in retained})


def to_bow(doc: TokenizedDocument, dictionary: Dictionary) -> dict[int, int]:
    """Sparse term counts for one document; out-of-vocabulary tokens are skipped."""
    counts: Counter[int] = Counter()
    for token in doc.tokens:
        if token in dictionary:
            counts[dictionary.index(token)] += 1
    return {i: counts[i] for i in sorted(counts)}


@dataclass(frozen=True)
class BowCorpus:
    dictionary: Dictionary
    doc_ids: tuple[str, ...]
    bows: tuple[dict[int, int], ...]

    @property
    def num_documents(self) -> int:
        return len(self.doc_ids)

    @classmethod
    def from_documents(cls, docs: Sequence[TokenizedDocument],
                       dictionary: Dictionary) -> "BowCorpus":
        return cls(
            dictionary=dictionary,
            doc_ids=tuple(d.doc_id for d in docs),
            bows=tuple(to_bow(d, dictionary) for d in docs),
        )


def read_corpus_csv(path: str | Path) -> list[RawDocument]:
    """Read a `doc_id,title` CSV (RFC-4180, UTF-8) into raw documents."""
    path = Path(path)
    docs: list[RawDocument] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["doc_id", "title"]:
            raise CorpusFormatError(
                f"{path}: expected header 'doc_id,title', got {reader.fieldnames!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            doc_id = (row.get("doc_id") or "").strip()
            title = (row.get("title") or "").strip()
            if not doc_id:
                raise CorpusFormatError(f"{path}:{lineno}: missing doc_id")
            if doc_id in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            if not title:
                raise CorpusFormatError(f"{path}:{lineno}: empty title for {doc_id!r}")
            seen.add(doc_id)
            docs.append(RawDocument(doc_id=doc_id, title=title))
    return docs


def write_tokenized_jsonl(docs: Sequence[TokenizedDocument], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"doc_id": doc.doc_id, "tokens": list(doc.tokens)},
                                sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_tokenized_jsonl(path: str | Path) -> list[TokenizedDocument]:
    docs = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            docs.append(TokenizedDocument(doc_id=obj["doc_id"], tokens=tuple(obj["tokens"])))
    return docs

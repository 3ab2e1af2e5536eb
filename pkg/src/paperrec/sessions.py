"""Synthetic interaction logs with plantable preference dynamics.

Stands in for a private click log: each simulated user follows a latent
topic process (a personal Markov chain with dwell times, or a
deterministic second-order rule where the next topic repeats the one two
clicks back), clicks papers drawn from per-topic item pools, and
accumulates sessions whenever the inter-click gap exceeds the threshold.
Per-user RNG streams are derived from the global seed so logs are
byte-reproducible and users can be generated independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable
from urllib.parse import quote

import numpy as np

from .intent import InteractionEvent

REGIME_MARKOV = "markov"
REGIME_SECOND_ORDER = "second_order"


class IngestError(ValueError):
    """One or more malformed lines in an event log."""

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        lines = "; ".join(f"line {n}: {msg}" for n, msg in problems[:5])
        extra = "" if len(problems) <= 5 else f" (+{len(problems) - 5} more)"
        super().__init__(f"invalid event log: {lines}{extra}")


@dataclass(frozen=True)
class RegimeConfig:
    kind: str = REGIME_MARKOV
    dwell_mean: float = 5.0
    transition_concentration: float = 0.5

    def __post_init__(self):
        if self.kind not in (REGIME_MARKOV, REGIME_SECOND_ORDER):
            raise ValueError(f"unknown regime kind {self.kind!r}")
        if self.dwell_mean < 1.0:
            raise ValueError("dwell_mean must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    num_users: int = 50
    num_items: int = 5213
    num_topics: int = 8
    events_per_user: int = 200
    regime: RegimeConfig = field(default_factory=RegimeConfig)
    inter_click_median_s: float = 60.0
    inter_click_sigma: float = 1.0
    session_break_prob: float = 0.05
    session_break_median_s: float = 7200.0
    session_gap_s: float = 1800.0
    liked_prob: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if min(self.num_users, self.num_items, self.num_topics) < 1:
            raise ValueError("counts must be positive")
        if self.events_per_user < 0:
            raise ValueError("events_per_user must be >= 0")
        if self.num_items < self.num_topics:
            raise ValueError("need at least one item per topic")


def _user_rng(config: SimConfig, user_index: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, user_index])


def markov_transition_matrix(config: SimConfig, user_index: int) -> np.ndarray:
    """The per-user jump chain, reconstructible for oracle checks."""
    rng = _user_rng(config, user_index)
    alpha = [config.regime.transition_concentration] * config.num_topics
    return rng.dirichlet(alpha, size=config.num_topics)


def _topic_sequence(config: SimConfig, user_index: int,
                    rng: np.random.Generator) -> list[int]:
    t = config.num_topics
    n = config.events_per_user
    if config.regime.kind == REGIME_SECOND_ORDER:
        # Alternating pair with distinct members: next topic = two back.
        first = int(rng.integers(t))
        second = first if t == 1 else int((first + 1 + rng.integers(t - 1)) % t)
        seq = []
        for i in range(n):
            seq.append(first if i % 2 == 0 else second)
        return seq
    # Markov regime: the same rng draws the matrix first, matching
    # markov_transition_matrix, then the trajectory.
    matrix = rng.dirichlet(
        [config.regime.transition_concentration] * t, size=t)
    seq = []
    if n == 0:
        return seq
    current = int(rng.integers(t))
    dwell_p = 1.0 / config.regime.dwell_mean
    remaining = int(rng.geometric(dwell_p))
    for _ in range(n):
        seq.append(current)
        remaining -= 1
        if remaining <= 0:
            current = int(rng.choice(t, p=matrix[current]))
            remaining = int(rng.geometric(dwell_p))
    return seq


def simulate(config: SimConfig) -> list[InteractionEvent]:
    """Generate the full event log, ordered by user then by time."""
    pools = np.array_split(np.arange(config.num_items), config.num_topics)
    mu_click = float(np.log(config.inter_click_median_s))
    mu_break = float(np.log(config.session_break_median_s))
    events: list[InteractionEvent] = []
    for u in range(config.num_users):
        rng = _user_rng(config, u)
        topics = _topic_sequence(config, u, rng)
        user_id = f"u{u:03d}"
        ts = 1_000_000_000.0 + u * 10_000_000.0
        session = 1
        for i, topic in enumerate(topics):
            if i > 0:
                if rng.random() < config.session_break_prob:
                    gap = float(rng.lognormal(mu_break, config.inter_click_sigma))
                else:
                    gap = float(rng.lognormal(mu_click, config.inter_click_sigma))
                gap = max(gap, 1e-3)
                ts += gap
                if gap > config.session_gap_s:
                    session += 1
            pool = pools[topic]
            paper = int(pool[int(rng.integers(len(pool)))])
            liked = bool(rng.random() < config.liked_prob)
            events.append(InteractionEvent(
                user_id=user_id, paper_id=paper, topic=topic,
                timestamp=ts, session_no=session, liked=liked,
            ))
    return events


_EVENT_FIELDS = {
    "user_id": str,
    "paper_id": int,
    "topic": int,
    "timestamp": (int, float),
    "session_no": int,
    "liked": bool,
}


def event_to_json(event: InteractionEvent) -> str:
    return json.dumps({
        "user_id": event.user_id,
        "paper_id": event.paper_id,
        "topic": event.topic,
        "timestamp": event.timestamp,
        "session_no": event.session_no,
        "liked": event.liked,
    }, sort_keys=True, separators=(",", ":"))


def write_events_jsonl(events: Iterable[InteractionEvent], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(event_to_json(ev))
            fh.write("\n")


def _parse_event(obj: dict) -> InteractionEvent:
    for key, types in _EVENT_FIELDS.items():
        if key not in obj:
            raise ValueError(f"missing field {key!r}")
        value = obj[key]
        if isinstance(value, bool) and types is not bool:
            raise ValueError(f"field {key!r} has wrong type bool")
        if not isinstance(value, types):
            raise ValueError(f"field {key!r} has wrong type {type(value).__name__}")
    if obj["topic"] < 0:
        raise ValueError("topic must be >= 0")
    if obj["session_no"] < 0:
        raise ValueError("session_no must be >= 0")
    return InteractionEvent(
        user_id=obj["user_id"], paper_id=obj["paper_id"], topic=obj["topic"],
        timestamp=float(obj["timestamp"]), session_no=obj["session_no"],
        liked=obj["liked"],
    )


def parse_events(lines: Iterable[str]) -> list[InteractionEvent]:
    """Validate JSONL event lines; all problems are collected before raising."""
    events: list[InteractionEvent] = []
    problems: list[tuple[int, str]] = []
    last_seen: dict[str, tuple[float, int]] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("event line must be a JSON object")
            event = _parse_event(obj)
        except ValueError as exc:
            problems.append((lineno, str(exc)))
            continue
        prev = last_seen.get(event.user_id)
        if prev is not None:
            prev_ts, prev_session = prev
            if event.timestamp < prev_ts:
                problems.append(
                    (lineno, f"timestamps decrease for user {event.user_id!r}"))
                continue
            if event.session_no < prev_session:
                problems.append(
                    (lineno, f"session_no decreases for user {event.user_id!r}"))
                continue
        last_seen[event.user_id] = (event.timestamp, event.session_no)
        events.append(event)
    if problems:
        raise IngestError(problems)
    return events


def ingest(path: str | Path) -> list[InteractionEvent]:
    with Path(path).open(encoding="utf-8") as fh:
        return parse_events(fh)


class ProfileStore:
    """Append-only per-user event histories persisted as JSONL files.

    Duplicate events are kept on purpose: a user can click the same paper
    twice and both clicks matter to the sequence model.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._histories: dict[str, list[InteractionEvent]] = {}

    def _user_path(self, user_id: str) -> Path:
        return self.root / f"{quote(user_id, safe='')}.jsonl"

    def update(self, event: InteractionEvent) -> None:
        self._histories.setdefault(event.user_id, []).append(event)
        with self._user_path(event.user_id).open("a", encoding="utf-8") as fh:
            fh.write(event_to_json(event))
            fh.write("\n")

    def history(self, user_id: str) -> list[InteractionEvent]:
        return list(self._histories.get(user_id, []))

    def topic_sequence(self, user_id: str) -> list[int]:
        return [ev.topic for ev in self._histories.get(user_id, [])]

    def user_ids(self) -> list[str]:
        return sorted(self._histories)

    @classmethod
    def load(cls, root: str | Path) -> "ProfileStore":
        store = cls(root)
        for path in sorted(store.root.glob("*.jsonl")):
            with path.open(encoding="utf-8") as fh:
                for event in parse_events(fh):
                    store._histories.setdefault(event.user_id, []).append(event)
        return store


def profile_update(store: ProfileStore, event: InteractionEvent) -> ProfileStore:
    """Append one event to a user's profile (persisted immediately)."""
    store.update(event)
    return store

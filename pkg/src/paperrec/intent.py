"""Next-topic prediction from interaction sequences.

An LSTM reads a fixed look-back window of per-click features (one-hot
topic plus min-max-normalized time difference and session number) and
emits a distribution over the next topic. Gradients come from
backpropagation through time and parameters are updated with Adam.
Transition-matrix and frequent-pattern baselines share the same data
preparation so the comparison is apples to apples.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""


class InsufficientHistoryError(ValueError):
    """History shorter than the look-back window; callers should fall back
    to the transition-matrix baseline for such cold users."""


@dataclass(frozen=True)
class InteractionEvent:
    user_id: str
    paper_id: int
    topic: int
    timestamp: float
    session_no: int
    liked: bool = False


@dataclass(frozen=True)
class IntentConfig:
    num_topics: int
    hidden: int = 32
    lookback: int = 5
    epochs: int = 100
    batch: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    use_liked: bool = False

    def __post_init__(self):
        if self.num_topics < 1:
            raise ValueError("num_topics must be >= 1")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")

    @property
    def num_numeric(self) -> int:
        return 3 if self.use_liked else 2

    @property
    def input_dim(self) -> int:
        return self.num_topics + self.num_numeric


def featurize(events: Sequence[InteractionEvent], use_liked: bool = False) -> np.ndarray:
    """Raw per-click feature rows: topic, time difference, session number.

    The time difference is against the previous click of the same user
    (zero for the first). One row per event, in event order.
    """
    rows = np.zeros((len(events), 4 if use_liked else 3))
    prev_ts = None
    for i, ev in enumerate(events):
        dt = 0.0 if prev_ts is None else float(ev.timestamp - prev_ts)
        prev_ts = ev.timestamp
        rows[i, 0] = ev.topic
        rows[i, 1] = dt
        rows[i, 2] = ev.session_no
        if use_liked:
            rows[i, 3] = 1.0 if ev.liked else 0.0
    return rows


def normalize(x: float, params: tuple[float, float]) -> float:
    """Min-max scale into [0, 1]; constant features map to 0, out-of-range
    values clamp so test data stays inside the trained regime."""
    lo, hi = params
    if hi == lo:
        return 0.0
    return min(1.0, max(0.0, (x - lo) / (hi - lo)))


def denormalize(y: float, params: tuple[float, float]) -> float:
    lo, hi = params
    return lo + y * (hi - lo)


@dataclass(frozen=True)
class NormalizationParams:
    minimums: tuple[float, ...]
    maximums: tuple[float, ...]

    def __post_init__(self):
        if len(self.minimums) != len(self.maximums):
            raise ValueError("minimums and maximums must align")
        if any(hi < lo for lo, hi in zip(self.minimums, self.maximums)):
            raise ValueError("max must be >= min per feature")

    @classmethod
    def fit(cls, columns: np.ndarray) -> "NormalizationParams":
        if columns.size == 0:
            raise ValueError("cannot fit normalization on empty data")
        return cls(tuple(float(x) for x in columns.min(axis=0)),
                   tuple(float(x) for x in columns.max(axis=0)))

    def apply(self, columns: np.ndarray) -> np.ndarray:
        out = np.zeros_like(columns, dtype=np.float64)
        for j in range(columns.shape[1]):
            params = (self.minimums[j], self.maximums[j])
            out[:, j] = [normalize(float(x), params) for x in columns[:, j]]
        return out


def encode_rows(raw: np.ndarray, num_topics: int,
                norm: NormalizationParams) -> np.ndarray:
    """One-hot the topic column and normalize the numeric columns."""
    n = raw.shape[0]
    onehot = np.zeros((n, num_topics))
    topics = raw[:, 0].astype(np.int64)
    if n and (topics.min() < 0 or topics.max() >= num_topics):
        raise ValueError("topic index out of range for num_topics")
    onehot[np.arange(n), topics] = 1.0
    numeric = norm.apply(raw[:, 1:])
    return np.hstack([onehot, numeric])


@dataclass(frozen=True)
class SupervisedWindow:
    inputs: np.ndarray  # (lookback, feature_dim)
    target: int


def make_windows(rows: np.ndarray, targets: Sequence[int],
                 lookback: int) -> list[SupervisedWindow]:
    """Sliding look-back windows labelled with the topic of the next step."""
    if lookback < 1:
        raise ValueError("lookback must be >= 1")
    n = len(targets)
    if rows.shape[0] != n:
        raise ValueError("one feature row per step required")
    return [
        SupervisedWindow(inputs=rows[i:i + lookback], target=int(targets[i + lookback]))
        for i in range(n - lookback)
    ]


@dataclass
class LstmParams:
    """Gate weights act on the concatenation [h_prev, x_t]."""
    vf: np.ndarray
    vi: np.ndarray
    vc: np.ndarray
    vo: np.ndarray
    bf: np.ndarray
    bi: np.ndarray
    bc: np.ndarray
    bo: np.ndarray
    wy: np.ndarray
    by: np.ndarray

    @property
    def hidden(self) -> int:
        return self.vf.shape[0]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"vf": self.vf, "vi": self.vi, "vc": self.vc, "vo": self.vo,
                "bf": self.bf, "bi": self.bi, "bc": self.bc, "bo": self.bo,
                "wy": self.wy, "by": self.by}

    @classmethod
    def init(cls, hidden: int, input_dim: int, num_topics: int,
             rng: np.random.Generator) -> "LstmParams":
        scale = 1.0 / np.sqrt(hidden + input_dim)
        def w():
            return (rng.random((hidden, hidden + input_dim)) - 0.5) * 2 * scale
        return cls(
            vf=w(), vi=w(), vc=w(), vo=w(),
            bf=np.zeros(hidden), bi=np.zeros(hidden),
            bc=np.zeros(hidden), bo=np.zeros(hidden),
            wy=(rng.random((num_topics, hidden)) - 0.5) * 2 / np.sqrt(hidden),
            by=np.zeros(num_topics),
        )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def lstm_cell(x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
              params: LstmParams) -> tuple[np.ndarray, np.ndarray]:
    """One step of the gated cell update.

    Forget and input gates mix the previous cell state with a tanh
    candidate; the output gate scales tanh of the new state.
    """
    z = np.concatenate([h_prev, x_t])
    f = _sigmoid(params.vf @ z + params.bf)
    i = _sigmoid(params.vi @ z + params.bi)
    c_hat = np.tanh(params.vc @ z + params.bc)
    c_t = f * c_prev + i * c_hat
    o = _sigmoid(params.vo @ z + params.bo)
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(params: LstmParams, x: np.ndarray,
                   keep_cache: bool = False):
    """Unroll over time for a (batch, lookback, input_dim) tensor."""
    batch, steps, _ = x.shape
    hidden = params.hidden
    h = np.zeros((batch, hidden))
    c = np.zeros((batch, hidden))
    cache = []
    for t in range(steps):
        z = np.hstack([h, x[:, t, :]])
        f = _sigmoid(z @ params.vf.T + params.bf)
        i = _sigmoid(z @ params.vi.T + params.bi)
        c_hat = np.tanh(z @ params.vc.T + params.bc)
        c_new = f * c + i * c_hat
        o = _sigmoid(z @ params.vo.T + params.bo)
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        if keep_cache:
            cache.append((z, f, i, c_hat, o, c, c_new, tanh_c))
        h, c = h_new, c_new
    probs = _softmax_rows(h @ params.wy.T + params.by)
    return probs, h, cache


def loss_and_gradients(params: LstmParams, x: np.ndarray,
                       targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and gradients for every parameter."""
    batch = x.shape[0]
    probs, h_last, cache = _forward_batch(params, x, keep_cache=True)
    picked = probs[np.arange(batch), targets]
    loss = float(-np.log(picked).mean())
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite cross-entropy: {loss}")

    grads = {name: np.zeros_like(arr) for name, arr in params.as_dict().items()}
    dlogits = probs.copy()
    dlogits[np.arange(batch), targets] -= 1.0
    dlogits /= batch
    grads["wy"] = dlogits.T @ h_last
    grads["by"] = dlogits.sum(axis=0)
    dh = dlogits @ params.wy
    dc_carry = np.zeros((batch, params.hidden))
    for t in reversed(range(x.shape[1])):
        z, f, i, c_hat, o, c_prev, _c_new, tanh_c = cache[t]
        do = dh * tanh_c
        dc = dc_carry + dh * o * (1.0 - tanh_c ** 2)
        df = dc * c_prev
        di = dc * c_hat
        dc_hat = dc * i
        dc_carry = dc * f
        dz_f = df * f * (1.0 - f)
        dz_i = di * i * (1.0 - i)
        dz_c = dc_hat * (1.0 - c_hat ** 2)
        dz_o = do * o * (1.0 - o)
        grads["vf"] += dz_f.T @ z
        grads["vi"] += dz_i.T @ z
        grads["vc"] += dz_c.T @ z
        grads["vo"] += dz_o.T @ z
        grads["bf"] += dz_f.sum(axis=0)
        grads["bi"] += dz_i.sum(axis=0)
        grads["bc"] += dz_c.sum(axis=0)
        grads["bo"] += dz_o.sum(axis=0)
        dz = dz_f @ params.vf + dz_i @ params.vi + dz_c @ params.vc + dz_o @ params.vo
        dh = dz[:, :params.hidden]
    return loss, grads


@dataclass
class AdamState:
    """Per-parameter first and second moment accumulators with bias correction."""
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.step += 1
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / (1 - self.beta1 ** self.step)
            v_hat = self.v[name] / (1 - self.beta2 ** self.step)
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class IntentModel:
    params: LstmParams
    norm: NormalizationParams
    config: IntentConfig

    def to_payload(self) -> dict:
        weights = {name: arr.tolist() for name, arr in self.params.as_dict().items()}
        return {
            "format": "intent/1",
            "num_topics": self.config.num_topics,
            "hidden": self.config.hidden,
            "lookback": self.config.lookback,
            "use_liked": self.config.use_liked,
            "normalization": {"minimums": list(self.norm.minimums),
                              "maximums": list(self.norm.maximums)},
            "features": ["topic_onehot", "time_difference", "session_no"]
                        + (["liked"] if self.config.use_liked else []),
            "weights": weights,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "IntentModel":
        if payload.get("format") != "intent/1":
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        config = IntentConfig(
            num_topics=int(payload["num_topics"]),
            hidden=int(payload["hidden"]),
            lookback=int(payload["lookback"]),
            use_liked=bool(payload["use_liked"]),
        )
        weights = {name: np.asarray(arr, dtype=np.float64)
                   for name, arr in payload["weights"].items()}
        params = LstmParams(**weights)
        norm = NormalizationParams(
            tuple(payload["normalization"]["minimums"]),
            tuple(payload["normalization"]["maximums"]),
        )
        return cls(params=params, norm=norm, config=config)


def forward(model: IntentModel, window: np.ndarray) -> np.ndarray:
    """Distribution over next topics for one encoded (lookback, dim) window."""
    probs, _, _ = _forward_batch(model.params, window[None, :, :])
    return probs[0]


def train(windows: Sequence[SupervisedWindow], config: IntentConfig,
          norm: NormalizationParams) -> IntentModel:
    """Minimize cross-entropy with Adam over shuffled mini-batches."""
    rng = np.random.default_rng(config.seed)
    params = LstmParams.init(config.hidden, config.input_dim, config.num_topics, rng)
    model = IntentModel(params=params, norm=norm, config=config)
    if not windows:
        return model
    x = np.stack([w.inputs for w in windows])
    y = np.array([w.target for w in windows], dtype=np.int64)
    adam = AdamState(learning_rate=config.learning_rate, beta1=config.beta1,
                     beta2=config.beta2, eps=config.eps)
    pdict = params.as_dict()
    for _ in range(config.epochs):
        order = rng.permutation(len(windows))
        for start in range(0, len(windows), config.batch):
            idx = order[start:start + config.batch]
            _, grads = loss_and_gradients(params, x[idx], y[idx])
            adam.update(pdict, grads)
    return model


def predict_next(model: IntentModel,
                 history: Sequence[InteractionEvent]) -> tuple[int, np.ndarray]:
    """Most likely next topic given a user's latest clicks."""
    lookback = model.config.lookback
    if len(history) < lookback:
        raise InsufficientHistoryError(
            f"need at least {lookback} events, got {len(history)}; "
            "fall back to the transition-matrix baseline for this user"
        )
    raw = featurize(history, use_liked=model.config.use_liked)
    rows = encode_rows(raw, model.config.num_topics, model.norm)
    dist = forward(model, rows[-lookback:])
    return int(np.argmax(dist)), dist


class MarkovPredictor:
    """First-order transition matrix with add-one smoothing."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = matrix

    @property
    def num_topics(self) -> int:
        return self.matrix.shape[0]

    def distribution(self, last_topic: int) -> np.ndarray:
        return self.matrix[last_topic]

    def predict(self, last_topic: int) -> int:
        return int(np.argmax(self.matrix[last_topic]))


def markov_baseline(sequences: Sequence[Sequence[int]], num_topics: int) -> MarkovPredictor:
    counts = np.zeros((num_topics, num_topics))
    for seq in sequences:
        for a, b in zip(seq, seq[1:]):
            counts[a, b] += 1
    smoothed = counts + 1.0
    return MarkovPredictor(smoothed / smoothed.sum(axis=1, keepdims=True))


class FpmPredictor:
    """Most frequent continuation of the longest matching history suffix."""

    def __init__(self, patterns: dict[tuple[int, ...], Counter],
                 global_counts: Counter, num_topics: int, max_len: int):
        self.patterns = patterns
        self.global_counts = global_counts
        self.num_topics = num_topics
        self.max_len = max_len

    def _match(self, history: Sequence[int]) -> Counter:
        for length in range(min(self.max_len, len(history)), 0, -1):
            pattern = tuple(history[-length:])
            if pattern in self.patterns:
                return self.patterns[pattern]
        return self.global_counts

    def distribution(self, history: Sequence[int]) -> np.ndarray:
        counts = self._match(history)
        dist = np.zeros(self.num_topics)
        for topic, count in counts.items():
            dist[topic] = count
        total = dist.sum()
        return dist / total if total > 0 else np.full(self.num_topics, 1.0 / self.num_topics)

    def predict(self, history: Sequence[int]) -> int:
        dist = self.distribution(history)
        return int(np.argmax(dist))


def fpm_baseline(sequences: Sequence[Sequence[int]], num_topics: int,
                 max_len: int = 5) -> FpmPredictor:
    patterns: dict[tuple[int, ...], Counter] = defaultdict(Counter)
    global_counts: Counter = Counter()
    for seq in sequences:
        global_counts.update(seq)
        for i in range(1, len(seq)):
            nxt = seq[i]
            for length in range(1, min(max_len, i) + 1):
                patterns[tuple(seq[i - length:i])][nxt] += 1
    return FpmPredictor(dict(patterns), global_counts, num_topics, max_len)


def group_events_by_user(events: Sequence[InteractionEvent]) -> dict[str, list[InteractionEvent]]:
    """Per-user event lists ordered by timestamp (stable for equal stamps)."""
    grouped: dict[str, list[InteractionEvent]] = defaultdict(list)
    for ev in events:
        grouped[ev.user_id].append(ev)
    return {u: sorted(evs, key=lambda e: e.timestamp) for u, evs in grouped.items()}


def split_point(n: int, train_fraction: float) -> int:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    return int(n * train_fraction)


def prepare_windows(events: Sequence[InteractionEvent], config: IntentConfig,
                    train_fraction: float = 0.75,
                    norm: NormalizationParams | None = None):
    """Per-user chronological split into supervised windows.

    A window belongs to the split of its target step, so test windows may
    look back across the boundary, matching how the model is used live.
    Normalization parameters are fitted on training-split rows only.
    """
    grouped = group_events_by_user(events)
    raw_by_user = {u: featurize(evs, use_liked=config.use_liked)
                   for u, evs in grouped.items()}
    if norm is None:
        train_rows = [raw[:split_point(len(raw), train_fraction), 1:]
                      for raw in raw_by_user.values()]
        stacked = np.vstack([r for r in train_rows if len(r)])
        norm = NormalizationParams.fit(stacked)
    train_windows: list[SupervisedWindow] = []
    test_windows: list[SupervisedWindow] = []
    for user in sorted(grouped):
        evs = grouped[user]
        rows = encode_rows(raw_by_user[user], config.num_topics, norm)
        targets = [ev.topic for ev in evs]
        cut = split_point(len(evs), train_fraction)
        for i, window in enumerate(make_windows(rows, targets, config.lookback)):
            target_step = i + config.lookback
            (train_windows if target_step < cut else test_windows).append(window)
    return train_windows, test_windows, norm


def topic_sequences_split(events: Sequence[InteractionEvent],
                          train_fraction: float = 0.75):
    """Per-user topic sequences cut at the same chronological boundary."""
    grouped = group_events_by_user(events)
    train_seqs: dict[str, list[int]] = {}
    full_seqs: dict[str, list[int]] = {}
    cuts: dict[str, int] = {}
    for user in sorted(grouped):
        topics = [ev.topic for ev in grouped[user]]
        cut = split_point(len(topics), train_fraction)
        train_seqs[user] = topics[:cut]
        full_seqs[user] = topics
        cuts[user] = cut
    return train_seqs, full_seqs, cuts

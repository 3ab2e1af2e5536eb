"""Request and response models for the HTTP service.

Payloads carry artifacts inline (documents, model matrices, event logs) so
the service stays stateless and clients own all files. The artifact
sub-models mirror the on-disk JSON formats exactly.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from .. import intent, lda, sessions
from ..embed import SkipGramConfig
from ..fusion import FusionConfig


class RawDocumentIn(BaseModel):
    doc_id: str
    title: str


class TokenizedDocumentIO(BaseModel):
    doc_id: str
    tokens: list[str]


class DictionaryIO(BaseModel):
    min_count: int
    tokens: list[str]


class PreprocessRequest(BaseModel):
    documents: list[RawDocumentIn]
    min_count: int = 1


class PreprocessResponse(BaseModel):
    documents: list[TokenizedDocumentIO]
    dictionary: DictionaryIO
    empty_doc_ids: list[str]


class LdaConfigIO(BaseModel):
    k: int = Field(ge=1)
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 200
    burn_in: int = 50
    seed: int = 0

    def to_core(self) -> lda.LdaConfig:
        return lda.LdaConfig(k=self.k, alpha=self.alpha, beta=self.beta,
                             iterations=self.iterations, burn_in=self.burn_in,
                             seed=self.seed)


class LdaModelIO(BaseModel):
    format: Literal["lda/1"]
    k: int
    alpha: float
    beta: float
    tau: list[list[float]]
    dictionary: DictionaryIO


class LdaTrainRequest(BaseModel):
    documents: list[TokenizedDocumentIO]
    dictionary: DictionaryIO
    config: LdaConfigIO


class LdaTrainResponse(BaseModel):
    model: LdaModelIO
    top_words: list[list[str]]


class CoherenceRequest(BaseModel):
    documents: list[TokenizedDocumentIO]
    dictionary: DictionaryIO
    k_candidates: list[int]
    config: LdaConfigIO
    top_n: int = 10


class KCoherence(BaseModel):
    k: int
    mean_coherence: float | None  # None encodes a degenerate (-inf) mean


class CoherenceResponse(BaseModel):
    best_k: int
    scores: list[KCoherence]


class EmbedConfigIO(BaseModel):
    dim: int = 200
    window: int = 6
    min_count: int = 1
    epochs: int = 5
    learning_rate: float = 0.05
    seed: int = 0

    def to_core(self) -> SkipGramConfig:
        return SkipGramConfig(dim=self.dim, window=self.window,
                              min_count=self.min_count, epochs=self.epochs,
                              learning_rate=self.learning_rate, seed=self.seed)


class EmbeddingIO(BaseModel):
    format: Literal["sgns/1"]
    dim: int
    vectors: dict[str, list[float]]


class EmbedTrainRequest(BaseModel):
    documents: list[TokenizedDocumentIO]
    dictionary: DictionaryIO
    config: EmbedConfigIO


class EmbedTrainResponse(BaseModel):
    model: EmbeddingIO


class FusionConfigIO(BaseModel):
    seeds_per_topic: int = 2
    neighbors_per_seed: int = 6
    similarity_threshold: float = 0.4

    def to_core(self) -> FusionConfig:
        return FusionConfig(seeds_per_topic=self.seeds_per_topic,
                            neighbors_per_seed=self.neighbors_per_seed,
                            similarity_threshold=self.similarity_threshold)


class WordTopicMapIO(BaseModel):
    format: Literal["m2/1"]
    entries: dict[str, list[tuple[int, float]]]


class FuseRequest(BaseModel):
    lda_model: LdaModelIO
    embedding: EmbeddingIO
    config: FusionConfigIO = FusionConfigIO()


class FuseResponse(BaseModel):
    m2: WordTopicMapIO


class AssignRequest(BaseModel):
    documents: list[TokenizedDocumentIO]
    m2: WordTopicMapIO


class AssignmentIO(BaseModel):
    doc_id: str
    topic: int | None


class AssignResponse(BaseModel):
    assignments: list[AssignmentIO]


class EventIO(BaseModel):
    user_id: str
    paper_id: int
    topic: int = Field(ge=0)
    timestamp: float
    session_no: int = Field(ge=0)
    liked: bool = False

    def to_core(self) -> intent.InteractionEvent:
        return intent.InteractionEvent(
            user_id=self.user_id, paper_id=self.paper_id, topic=self.topic,
            timestamp=self.timestamp, session_no=self.session_no, liked=self.liked)

    @classmethod
    def from_core(cls, ev: intent.InteractionEvent) -> "EventIO":
        return cls(user_id=ev.user_id, paper_id=ev.paper_id, topic=ev.topic,
                   timestamp=ev.timestamp, session_no=ev.session_no, liked=ev.liked)


class RegimeConfigIO(BaseModel):
    kind: str = sessions.REGIME_MARKOV
    dwell_mean: float = 5.0
    transition_concentration: float = 0.5

    def to_core(self) -> sessions.RegimeConfig:
        return sessions.RegimeConfig(kind=self.kind, dwell_mean=self.dwell_mean,
                                     transition_concentration=self.transition_concentration)


class SimConfigIO(BaseModel):
    num_users: int = 50
    num_items: int = 5213
    num_topics: int = 8
    events_per_user: int = 200
    regime: RegimeConfigIO = RegimeConfigIO()
    inter_click_median_s: float = 60.0
    inter_click_sigma: float = 1.0
    session_break_prob: float = 0.05
    session_break_median_s: float = 7200.0
    session_gap_s: float = 1800.0
    liked_prob: float = 0.3
    seed: int = 0

    def to_core(self) -> sessions.SimConfig:
        return sessions.SimConfig(
            num_users=self.num_users, num_items=self.num_items,
            num_topics=self.num_topics, events_per_user=self.events_per_user,
            regime=self.regime.to_core(),
            inter_click_median_s=self.inter_click_median_s,
            inter_click_sigma=self.inter_click_sigma,
            session_break_prob=self.session_break_prob,
            session_break_median_s=self.session_break_median_s,
            session_gap_s=self.session_gap_s, liked_prob=self.liked_prob,
            seed=self.seed)


class SimulateRequest(BaseModel):
    config: SimConfigIO = SimConfigIO()


class SimulateResponse(BaseModel):
    events: list[EventIO]


class IntentConfigIO(BaseModel):
    num_topics: int = Field(ge=1)
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

    def to_core(self) -> intent.IntentConfig:
        return intent.IntentConfig(
            num_topics=self.num_topics, hidden=self.hidden, lookback=self.lookback,
            epochs=self.epochs, batch=self.batch, learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, eps=self.eps, seed=self.seed,
            use_liked=self.use_liked)


class NormalizationIO(BaseModel):
    minimums: list[float]
    maximums: list[float]


class IntentModelIO(BaseModel):
    format: Literal["intent/1"]
    num_topics: int
    hidden: int
    lookback: int
    use_liked: bool
    normalization: NormalizationIO
    features: list[str]
    weights: dict[str, list]


class IntentTrainRequest(BaseModel):
    events: list[EventIO]
    config: IntentConfigIO
    train_fraction: float = 0.75


class IntentTrainResponse(BaseModel):
    model: IntentModelIO
    train_windows: int
    test_windows: int


class PredictRequest(BaseModel):
    model: IntentModelIO
    events: list[EventIO]


class PredictResponse(BaseModel):
    user_id: str
    topic: int
    distribution: list[float]


class MetricRowIO(BaseModel):
    metric: str
    value: float
    split: str = ""


class StageReportIO(BaseModel):
    pipeline: str
    metrics: list[MetricRowIO]


class IntentEvalRequest(BaseModel):
    events: list[EventIO]
    model: IntentModelIO
    train_fraction: float = 0.75


class IntentEvalResponse(BaseModel):
    report: StageReportIO


class BaselineEvalRequest(BaseModel):
    events: list[EventIO]
    num_topics: int = Field(ge=1)
    train_fraction: float = 0.75
    fpm_max_len: int = 5


class BaselineEvalResponse(BaseModel):
    reports: list[StageReportIO]


class ProbeRequest(BaseModel):
    documents: list[TokenizedDocumentIO]
    dictionary: DictionaryIO
    assignments: list[AssignmentIO]
    pipeline: str
    folds: int = 5
    seed: int = 0


class ProbeResponse(BaseModel):
    report: StageReportIO
    per_fold_micro: list[float]
    per_fold_macro: list[float]
    skipped_unassigned: int


class RankQueryIO(BaseModel):
    recommended: list[int]
    relevant: list[int]
    clicked: list[int] = []


class RankEvalRequest(BaseModel):
    queries: list[RankQueryIO]
    k: int = 10


class RankEvalResponse(BaseModel):
    report: StageReportIO
    k: int


class ReportMergeRequest(BaseModel):
    reports: list[StageReportIO]


class ReportRowIO(BaseModel):
    metric: str
    value: float
    split: str
    pipeline: str


class ReportMergeResponse(BaseModel):
    rows: list[ReportRowIO]


class HealthResponse(BaseModel):
    status: str
    version: str

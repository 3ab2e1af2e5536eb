"""HTTP service exposing every pipeline stage as a stateless endpoint.

Requests carry all inputs inline and responses return the produced
artifacts, so any number of clients can drive the same service without
sharing a filesystem. The CLI is one such client.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException

from .. import __version__, corpus, embed, evaluation, fusion, intent, lda, sessions
from . import schemas as s

DIVERGED = "diverged_training"
INVALID = "invalid_input"


def _bad_request(code: str, message: str, status: int = 422) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def _docs_from_io(documents: list[s.TokenizedDocumentIO]) -> list[corpus.TokenizedDocument]:
    return [corpus.TokenizedDocument(doc_id=d.doc_id, tokens=tuple(d.tokens))
            for d in documents]


def _bow_corpus(documents: list[s.TokenizedDocumentIO],
                dictionary_io: s.DictionaryIO) -> corpus.BowCorpus:
    dictionary = corpus.Dictionary(dictionary_io.tokens, dictionary_io.min_count)
    return corpus.BowCorpus.from_documents(_docs_from_io(documents), dictionary)


def create_app() -> FastAPI:
    app = FastAPI(title="paperrec", version=__version__)

    @app.get("/healthz", response_model=s.HealthResponse)
    def healthz() -> s.HealthResponse:
        return s.HealthResponse(status="ok", version=__version__)

    @app.post("/preprocess", response_model=s.PreprocessResponse)
    def preprocess(req: s.PreprocessRequest) -> s.PreprocessResponse:
        raw = [corpus.RawDocument(doc_id=d.doc_id, title=d.title) for d in req.documents]
        seen = set()
        for d in raw:
            if not d.title.strip():
                raise _bad_request(INVALID, f"empty title for doc {d.doc_id!r}")
            if d.doc_id in seen:
                raise _bad_request(INVALID, f"duplicate doc_id {d.doc_id!r}")
            seen.add(d.doc_id)
        tokenized = [corpus.preprocess(d) for d in raw]
        try:
            dictionary = corpus.build_dictionary(tokenized, min_count=req.min_count)
        except corpus.EmptyVocabularyError as exc:
            raise _bad_request(INVALID, str(exc))
        return s.PreprocessResponse(
            documents=[s.TokenizedDocumentIO(doc_id=d.doc_id, tokens=list(d.tokens))
                       for d in tokenized],
            dictionary=s.DictionaryIO(**dictionary.to_payload()),
            empty_doc_ids=[d.doc_id for d in tokenized if d.empty],
        )

    @app.post("/lda/train", response_model=s.LdaTrainResponse)
    def lda_train(req: s.LdaTrainRequest) -> s.LdaTrainResponse:
        try:
            config = req.config.to_core()
            bow = _bow_corpus(req.documents, req.dictionary)
            state = lda.train_lda(bow, config)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        tau = lda.estimate_tau(state)
        payload = lda.lda_model_payload(config, tau, bow.dictionary)
        words = [[bow.dictionary.token(w) for w in lda.top_words(tau, t, 10)]
                 for t in range(config.k)]
        return s.LdaTrainResponse(model=s.LdaModelIO(**payload), top_words=words)

    @app.post("/lda/coherence", response_model=s.CoherenceResponse)
    def lda_coherence(req: s.CoherenceRequest) -> s.CoherenceResponse:
        if not req.k_candidates:
            raise _bad_request(INVALID, "k_candidates must be non-empty")
        try:
            config = req.config.to_core()
            bow = _bow_corpus(req.documents, req.dictionary)
            best_k, scores = lda.select_k(bow, req.k_candidates, config, top_n=req.top_n)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        rows = [s.KCoherence(k=k, mean_coherence=None if math.isinf(v) else v)
                for k, v in zip(req.k_candidates, scores)]
        return s.CoherenceResponse(best_k=best_k, scores=rows)

    @app.post("/embed/train", response_model=s.EmbedTrainResponse)
    def embed_train(req: s.EmbedTrainRequest) -> s.EmbedTrainResponse:
        try:
            config = req.config.to_core()
            dictionary = corpus.Dictionary(req.dictionary.tokens, req.dictionary.min_count)
            docs = _docs_from_io(req.documents)
            frequencies = {}
            for d in docs:
                for t in d.tokens:
                    if t in dictionary:
                        frequencies[t] = frequencies.get(t, 0) + 1
            dictionary.frequencies = frequencies
            model = embed.train(docs, dictionary, config)
        except embed.TrainingDivergedError as exc:
            raise _bad_request(DIVERGED, str(exc), status=500)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        return s.EmbedTrainResponse(model=s.EmbeddingIO(**model.to_payload()))

    @app.post("/fusion/build", response_model=s.FuseResponse)
    def fusion_build(req: s.FuseRequest) -> s.FuseResponse:
        try:
            tau, dictionary, _ = lda.load_lda_model(req.lda_model.model_dump())
            embedding = embed.EmbeddingModel.from_payload(req.embedding.model_dump())
            m2 = fusion.build_word_topic_map(tau, dictionary, embedding,
                                             req.config.to_core())
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        return s.FuseResponse(m2=s.WordTopicMapIO(**m2.to_payload()))

    @app.post("/fusion/assign", response_model=s.AssignResponse)
    def fusion_assign(req: s.AssignRequest) -> s.AssignResponse:
        try:
            m2 = fusion.WordTopicMap.from_payload(req.m2.model_dump())
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        labels = fusion.assign_corpus(_docs_from_io(req.documents), m2)
        return s.AssignResponse(
            assignments=[s.AssignmentIO(doc_id=doc_id, topic=topic)
                         for doc_id, topic in labels])

    @app.post("/sessions/simulate", response_model=s.SimulateResponse)
    def sessions_simulate(req: s.SimulateRequest) -> s.SimulateResponse:
        try:
            events = sessions.simulate(req.config.to_core())
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        return s.SimulateResponse(events=[s.EventIO.from_core(ev) for ev in events])

    @app.post("/intent/train", response_model=s.IntentTrainResponse)
    def intent_train(req: s.IntentTrainRequest) -> s.IntentTrainResponse:
        try:
            config = req.config.to_core()
            events = [ev.to_core() for ev in req.events]
            train_w, test_w, norm = intent.prepare_windows(
                events, config, train_fraction=req.train_fraction)
            model = intent.train(train_w, config, norm)
        except intent.TrainingDivergedError as exc:
            raise _bad_request(DIVERGED, str(exc), status=500)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        return s.IntentTrainResponse(
            model=s.IntentModelIO(**model.to_payload()),
            train_windows=len(train_w), test_windows=len(test_w))

    @app.post("/intent/predict", response_model=s.PredictResponse)
    def intent_predict(req: s.PredictRequest) -> s.PredictResponse:
        """Next-topic prediction for one user's click history."""
        if not req.events:
            raise _bad_request(INVALID, "empty history")
        users = {ev.user_id for ev in req.events}
        if len(users) > 1:
            raise _bad_request(INVALID, f"history mixes users: {sorted(users)}")
        try:
            model = intent.IntentModel.from_payload(req.model.model_dump())
            history = sorted((ev.to_core() for ev in req.events),
                             key=lambda e: e.timestamp)
            topic, dist = intent.predict_next(model, history)
        except intent.InsufficientHistoryError as exc:
            raise _bad_request("insufficient_history", str(exc))
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        return s.PredictResponse(user_id=req.events[0].user_id, topic=topic,
                                 distribution=[float(x) for x in dist])

    @app.post("/intent/evaluate", response_model=s.IntentEvalResponse)
    def intent_evaluate(req: s.IntentEvalRequest) -> s.IntentEvalResponse:
        try:
            model = intent.IntentModel.from_payload(req.model.model_dump())
            events = [ev.to_core() for ev in req.events]
            reports = evaluation.evaluate_sequence_model(
                model, events, train_fraction=req.train_fraction)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        metrics = []
        for split in ("train", "test"):
            rep = reports[split]
            metrics.append(s.MetricRowIO(metric="accuracy", value=rep.accuracy, split=split))
            metrics.append(s.MetricRowIO(metric="rmse", value=rep.rmse, split=split))
        return s.IntentEvalResponse(
            report=s.StageReportIO(pipeline="lstm", metrics=metrics))

    @app.post("/baselines/evaluate", response_model=s.BaselineEvalResponse)
    def baselines_evaluate(req: s.BaselineEvalRequest) -> s.BaselineEvalResponse:
        try:
            events = [ev.to_core() for ev in req.events]
            train_seqs, _, _ = intent.topic_sequences_split(events, req.train_fraction)
            seqs = list(train_seqs.values())
            markov = intent.markov_baseline(seqs, req.num_topics)
            fpm = intent.fpm_baseline(seqs, req.num_topics, max_len=req.fpm_max_len)
            markov_reports = evaluation.evaluate_markov(markov, events, req.train_fraction)
            fpm_reports = evaluation.evaluate_fpm(fpm, events, req.train_fraction)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        out = []
        for name, reports in (("markov", markov_reports), ("fpm", fpm_reports)):
            metrics = []
            for split in ("train", "test"):
                rep = reports[split]
                metrics.append(s.MetricRowIO(metric="accuracy", value=rep.accuracy, split=split))
                metrics.append(s.MetricRowIO(metric="rmse", value=rep.rmse, split=split))
            out.append(s.StageReportIO(pipeline=name, metrics=metrics))
        return s.BaselineEvalResponse(reports=out)

    @app.post("/eval/probe", response_model=s.ProbeResponse)
    def eval_probe(req: s.ProbeRequest) -> s.ProbeResponse:
        by_id = {a.doc_id: a.topic for a in req.assignments}
        docs = [d for d in req.documents if by_id.get(d.doc_id) is not None]
        skipped = len(req.documents) - len(docs)
        if not docs:
            raise _bad_request(INVALID, "no assigned documents to probe")
        try:
            bow = _bow_corpus(docs, req.dictionary)
            labels = [int(by_id[d.doc_id]) for d in docs]
            num_classes = max(labels) + 1
            features = evaluation.tfidf_features(bow)
            report = evaluation.kfold_probe(features, labels, num_classes,
                                            folds=req.folds, seed=req.seed)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        metrics = [
            s.MetricRowIO(metric="f1_micro", value=report.f1_micro, split="cv"),
            s.MetricRowIO(metric="f1_macro", value=report.f1_macro, split="cv"),
            s.MetricRowIO(metric="accuracy", value=report.accuracy, split="cv"),
        ]
        return s.ProbeResponse(
            report=s.StageReportIO(pipeline=req.pipeline, metrics=metrics),
            per_fold_micro=list(report.per_fold_micro),
            per_fold_macro=list(report.per_fold_macro),
            skipped_unassigned=skipped,
        )

    @app.post("/ranking/evaluate", response_model=s.RankEvalResponse)
    def ranking_evaluate(req: s.RankEvalRequest) -> s.RankEvalResponse:
        try:
            report = evaluation.ranking_report(
                [q.model_dump() for q in req.queries], k=req.k)
        except ValueError as exc:
            raise _bad_request(INVALID, str(exc))
        metrics = [
            s.MetricRowIO(metric=f"recall_at_{req.k}", value=report.recall_at_k),
            s.MetricRowIO(metric=f"precision_at_{req.k}", value=report.precision_at_k),
            s.MetricRowIO(metric=f"mrr_at_{req.k}", value=report.mrr_at_k),
            s.MetricRowIO(metric="ctr", value=report.ctr),
        ]
        return s.RankEvalResponse(
            report=s.StageReportIO(pipeline="ranking", metrics=metrics), k=req.k)

    @app.post("/report/merge", response_model=s.ReportMergeResponse)
    def report_merge(req: s.ReportMergeRequest) -> s.ReportMergeResponse:
        rows = evaluation.merge_reports([r.model_dump() for r in req.reports])
        return s.ReportMergeResponse(rows=[s.ReportRowIO(**row) for row in rows])

    return app


app = create_app()

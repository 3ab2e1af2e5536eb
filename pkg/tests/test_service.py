"""HTTP surface: schemas, status codes, and error mapping."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from paperrec.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def preprocessed(client):
    documents = [
        {"doc_id": "d1", "title": "Deep learning for image recognition"},
        {"doc_id": "d2", "title": "Convolutional networks for image classification"},
        {"doc_id": "d3", "title": "Topic models for text mining"},
        {"doc_id": "d4", "title": "Latent dirichlet allocation text topics"},
        {"doc_id": "d5", "title": "Image segmentation with deep networks"},
        {"doc_id": "d6", "title": "Mining topics from scientific text"},
    ]
    response = client.post("/preprocess", json={"documents": documents, "min_count": 1})
    assert response.status_code == 200
    return response.json()


@pytest.fixture(scope="module")
def lda_model(client, preprocessed):
    response = client.post("/lda/train", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "config": {"k": 2, "iterations": 40, "burn_in": 5, "seed": 3},
    })
    assert response.status_code == 200
    return response.json()["model"]


@pytest.fixture(scope="module")
def embedding(client, preprocessed):
    response = client.post("/embed/train", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "config": {"dim": 8, "window": 3, "epochs": 10,
                   "learning_rate": 0.05, "seed": 1},
    })
    assert response.status_code == 200
    return response.json()["model"]


@pytest.fixture(scope="module")
def sim_events(client):
    response = client.post("/sessions/simulate", json={"config": {
        "num_users": 4, "num_items": 30, "num_topics": 3,
        "events_per_user": 80, "regime": {"kind": "second_order"}, "seed": 5,
    }})
    assert response.status_code == 200
    return response.json()["events"]


def test_healthz(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"


def test_preprocess_reports_empty_docs(client):
    response = client.post("/preprocess", json={
        "documents": [{"doc_id": "a", "title": "of the and"},
                      {"doc_id": "b", "title": "graph neural network"}]})
    body = response.json()
    assert body["empty_doc_ids"] == ["a"]


def test_preprocess_rejects_duplicate_ids(client):
    response = client.post("/preprocess", json={
        "documents": [{"doc_id": "a", "title": "x y"},
                      {"doc_id": "a", "title": "z w"}]})
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "invalid_input"


def test_preprocess_empty_vocabulary(client):
    response = client.post("/preprocess", json={
        "documents": [{"doc_id": "a", "title": "of the and"}]})
    assert response.status_code == 422


def test_lda_train_model_schema(lda_model, preprocessed):
    assert lda_model["format"] == "lda/1"
    assert lda_model["k"] == 2
    tau = np.array(lda_model["tau"])
    assert tau.shape == (2, len(preprocessed["dictionary"]["tokens"]))
    assert np.allclose(tau.sum(axis=1), 1.0, atol=1e-9)


def test_lda_train_rejects_bad_config(client, preprocessed):
    response = client.post("/lda/train", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "config": {"k": 2, "iterations": 5, "burn_in": 9, "seed": 0},
    })
    assert response.status_code == 422


def test_coherence_scores_per_candidate(client, preprocessed):
    response = client.post("/lda/coherence", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "k_candidates": [2, 3],
        "config": {"k": 2, "iterations": 15, "burn_in": 3, "seed": 0},
        "top_n": 3,
    })
    body = response.json()
    assert [row["k"] for row in body["scores"]] == [2, 3]
    assert body["best_k"] in (2, 3)


def test_embed_train_schema(embedding, preprocessed):
    assert embedding["format"] == "sgns/1"
    assert embedding["dim"] == 8
    assert set(embedding["vectors"]) == set(preprocessed["dictionary"]["tokens"])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_embed_train_divergence_maps_to_500(client, preprocessed):
    response = client.post("/embed/train", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "config": {"dim": 4, "window": 2, "epochs": 5,
                   "learning_rate": 1e12, "seed": 0},
    })
    assert response.status_code == 500
    assert response.json()["detail"]["code"] == "diverged_training"


def test_fusion_build_and_assign(client, lda_model, embedding, preprocessed):
    build = client.post("/fusion/build", json={
        "lda_model": lda_model, "embedding": embedding,
        "config": {"seeds_per_topic": 2, "neighbors_per_seed": 3,
                   "similarity_threshold": 0.2}})
    assert build.status_code == 200
    m2 = build.json()["m2"]
    assert m2["format"] == "m2/1"
    docs = preprocessed["documents"] + [{"doc_id": "oov", "tokens": ["qqqq"]}]
    assign = client.post("/fusion/assign", json={"documents": docs, "m2": m2})
    body = assign.json()
    by_id = {a["doc_id"]: a["topic"] for a in body["assignments"]}
    assert by_id["oov"] is None
    assert all(t in (0, 1) for d, t in by_id.items() if d != "oov")


def test_fusion_build_rejects_wrong_format(client, embedding):
    response = client.post("/fusion/build", json={
        "lda_model": {"format": "lda/1", "k": 1, "alpha": 1.0, "beta": 0.1,
                      "tau": [[0.5, 0.5]],
                      "dictionary": {"min_count": 1, "tokens": ["a"]}},
        "embedding": embedding})
    assert response.status_code == 422


def test_simulate_deterministic(client, sim_events):
    again = client.post("/sessions/simulate", json={"config": {
        "num_users": 4, "num_items": 30, "num_topics": 3,
        "events_per_user": 80, "regime": {"kind": "second_order"}, "seed": 5,
    }}).json()["events"]
    assert again == sim_events


def test_intent_train_eval_roundtrip(client, sim_events):
    train = client.post("/intent/train", json={
        "events": sim_events,
        "config": {"num_topics": 3, "hidden": 8, "lookback": 3, "epochs": 8,
                   "batch": 16, "learning_rate": 0.005, "seed": 0},
        "train_fraction": 0.75})
    assert train.status_code == 200
    body = train.json()
    assert body["model"]["format"] == "intent/1"
    assert body["train_windows"] > 0
    evaluate = client.post("/intent/evaluate", json={
        "events": sim_events, "model": body["model"], "train_fraction": 0.75})
    report = evaluate.json()["report"]
    assert report["pipeline"] == "lstm"
    metrics = {(m["metric"], m["split"]): m["value"] for m in report["metrics"]}
    assert ("accuracy", "test") in metrics
    assert 0.0 <= metrics[("accuracy", "test")] <= 1.0


def test_intent_predict_serves_next_topic(client, sim_events):
    train = client.post("/intent/train", json={
        "events": sim_events,
        "config": {"num_topics": 3, "hidden": 8, "lookback": 3, "epochs": 8,
                   "batch": 16, "learning_rate": 0.005, "seed": 0},
        "train_fraction": 0.75})
    model = train.json()["model"]
    history = [e for e in sim_events if e["user_id"] == sim_events[0]["user_id"]]
    response = client.post("/intent/predict", json={
        "model": model, "events": history})
    body = response.json()
    assert body["user_id"] == history[0]["user_id"]
    dist = np.array(body["distribution"])
    assert dist.shape == (3,)
    assert abs(dist.sum() - 1.0) < 1e-9
    assert body["topic"] == int(np.argmax(dist))


def test_intent_predict_short_history_names_fallback(client, sim_events):
    train = client.post("/intent/train", json={
        "events": sim_events,
        "config": {"num_topics": 3, "hidden": 4, "lookback": 5, "epochs": 0,
                   "seed": 0},
        "train_fraction": 0.75})
    model = train.json()["model"]
    response = client.post("/intent/predict", json={
        "model": model, "events": sim_events[:2]})
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["code"] == "insufficient_history"
    assert "baseline" in detail["message"]


def test_intent_predict_rejects_mixed_users(client, sim_events):
    train = client.post("/intent/train", json={
        "events": sim_events,
        "config": {"num_topics": 3, "hidden": 4, "lookback": 2, "epochs": 0,
                   "seed": 0},
        "train_fraction": 0.75})
    model = train.json()["model"]
    mixed = [dict(sim_events[0]), dict(sim_events[0])]
    mixed[1]["user_id"] = "someone-else"
    response = client.post("/intent/predict", json={
        "model": model, "events": mixed})
    assert response.status_code == 422


def test_baselines_evaluate(client, sim_events):
    response = client.post("/baselines/evaluate", json={
        "events": sim_events, "num_topics": 3, "train_fraction": 0.75})
    body = response.json()
    assert [r["pipeline"] for r in body["reports"]] == ["markov", "fpm"]
    for report in body["reports"]:
        assert len(report["metrics"]) == 4


def test_probe_skips_unassigned(client, preprocessed):
    assignments = [{"doc_id": d["doc_id"], "topic": i % 2}
                   for i, d in enumerate(preprocessed["documents"])]
    assignments[0]["topic"] = None
    response = client.post("/eval/probe", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "assignments": assignments, "pipeline": "hybrid", "folds": 5, "seed": 0})
    body = response.json()
    assert body["skipped_unassigned"] == 1
    assert body["report"]["pipeline"] == "hybrid"


def test_probe_with_nothing_assigned_is_rejected(client, preprocessed):
    assignments = [{"doc_id": d["doc_id"], "topic": None}
                   for d in preprocessed["documents"]]
    response = client.post("/eval/probe", json={
        "documents": preprocessed["documents"],
        "dictionary": preprocessed["dictionary"],
        "assignments": assignments, "pipeline": "lda"})
    assert response.status_code == 422


def test_ranking_evaluate(client):
    response = client.post("/ranking/evaluate", json={
        "queries": [{"recommended": [1, 2, 3], "relevant": [2, 9],
                     "clicked": [2]}], "k": 3})
    metrics = {m["metric"]: m["value"]
               for m in response.json()["report"]["metrics"]}
    assert metrics["recall_at_3"] == pytest.approx(0.5)
    assert metrics["mrr_at_3"] == pytest.approx(0.5)
    assert metrics["ctr"] == pytest.approx(1 / 3)


def test_ranking_requires_queries(client):
    response = client.post("/ranking/evaluate", json={"queries": [], "k": 5})
    assert response.status_code == 422


def test_report_merge_sorts_rows(client):
    response = client.post("/report/merge", json={"reports": [
        {"pipeline": "lstm", "metrics": [
            {"metric": "accuracy", "value": 0.9, "split": "test"}]},
        {"pipeline": "fpm", "metrics": [
            {"metric": "accuracy", "value": 0.4, "split": "test"}]},
    ]})
    rows = response.json()["rows"]
    assert [r["pipeline"] for r in rows] == ["fpm", "lstm"]

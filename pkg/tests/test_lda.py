"""Collapsed Gibbs sampler: exact conditionals, count bookkeeping, coherence."""

import itertools
import math

import numpy as np
import pytest

from conftest import planted_corpus, random_corpus
from paperrec.corpus import BowCorpus, Dictionary, TokenizedDocument, build_dictionary
from paperrec.lda import (
    LdaConfig,
    TopicWordDistribution,
    coherence,
    conditional,
    estimate_tau,
    estimate_theta,
    gibbs_sweep,
    init_assignments,
    lda_model_payload,
    load_lda_model,
    select_k,
    top_words,
    train_lda,
)


def bow_from_token_ids(token_docs: list[list[int]], vocab_size: int) -> BowCorpus:
    tokens = [f"w{i:02d}" for i in range(vocab_size)]
    dictionary = Dictionary(tokens, 1)
    docs = [TokenizedDocument(f"d{j}", tuple(tokens[w] for w in doc))
            for j, doc in enumerate(token_docs)]
    return BowCorpus.from_documents(docs, dictionary)


def force_assignment(state, assignment):
    for d, topics in enumerate(assignment):
        for pos, topic in enumerate(topics):
            state._remove(d, pos)
            state._add(d, pos, int(topic))
    return state


def recount(state, exclude: tuple[int, int] | None = None):
    """Independent recount of both matrices from the raw assignments.

    `exclude` drops one token position, mirroring the z-minus-i exclusion
    of the resampled token.
    """
    v, k = state.word_topic.shape
    wt = np.zeros((v, k), dtype=np.int64)
    dt = np.zeros((state.num_documents, k), dtype=np.int64)
    for d, doc in enumerate(state.docs):
        for pos, w in enumerate(doc):
            if exclude == (d, pos):
                continue
            t = state.z[d][pos]
            wt[w, t] += 1
            dt[d, t] += 1
    return wt, dt


def eq3_reference(wt, dt, doc, w, alpha, beta, v, k):
    """Plain-Python evaluation of the full conditional, term by term."""
    doc_total = sum(dt[doc])
    probs = []
    for j in range(k):
        topic_total = sum(wt[x][j] for x in range(v))
        word_part = (wt[w][j] + beta) / (topic_total + v * beta)
        doc_part = (dt[doc][j] + alpha) / (doc_total + k * alpha)
        probs.append(word_part * doc_part)
    total = sum(probs)
    return [p / total for p in probs]


class TestInitAssignments:
    def test_single_topic(self):
        bow = bow_from_token_ids([[0, 1, 0], [1]], 2)
        state = init_assignments(bow, LdaConfig(k=1, iterations=1, burn_in=0))
        assert all((z == 0).all() for z in state.z)
        assert state.doc_topic[0, 0] == 3
        assert state.doc_topic[1, 0] == 1

    def test_seed_determinism(self):
        bow = bow_from_token_ids([[0, 1, 2], [2, 1], [0]], 3)
        cfg = LdaConfig(k=3, iterations=1, burn_in=0, seed=9)
        a = init_assignments(bow, cfg)
        b = init_assignments(bow, cfg)
        assert all((x == y).all() for x, y in zip(a.z, b.z))
        assert (a.word_topic == b.word_topic).all()

    def test_counts_consistent_with_assignments(self):
        rng = np.random.default_rng(4)
        docs = random_corpus(rng, n_docs=10)
        dictionary = build_dictionary(docs, min_count=1)
        bow = BowCorpus.from_documents(docs, dictionary)
        state = init_assignments(bow, LdaConfig(k=4, iterations=1, burn_in=0, seed=1))
        wt, dt = recount(state)
        assert (wt == state.word_topic).all()
        assert (dt == state.doc_topic).all()
        assert (wt.sum(axis=0) == state.topic_totals).all()


class TestConditional:
    def test_uniform_when_counts_empty(self):
        bow = bow_from_token_ids([[0]], 1)
        state = init_assignments(bow, LdaConfig(k=2, iterations=1, burn_in=0, seed=0))
        state._remove(0, 0)
        p = conditional(state, 0, 0)
        assert np.allclose(p, [0.5, 0.5], atol=1e-15)

    def test_hand_evaluated_counts(self):
        # After exclusion: word-topic [[2,0],[0,2]], title row [2,2], word 0,
        # alpha = beta = 1. Hand evaluation gives exactly [0.75, 0.25].
        bow = bow_from_token_ids([[0, 0, 0, 1, 1]], 2)
        cfg = LdaConfig(k=2, alpha=1.0, beta=1.0, iterations=1, burn_in=0, seed=0)
        state = init_assignments(bow, cfg)
        state.word_topic[:] = np.array([[2, 0], [0, 2]])
        state.doc_topic[:] = np.array([[2, 2]])
        state.topic_totals[:] = np.array([2, 2])
        p = conditional(state, 0, 0)
        assert np.allclose(p, [0.75, 0.25], atol=1e-12)

    def test_negative_counts_rejected(self):
        bow = bow_from_token_ids([[0, 1]], 2)
        state = init_assignments(bow, LdaConfig(k=2, iterations=1, burn_in=0, seed=0))
        state.word_topic[0, 0] = -1
        with pytest.raises(ValueError, match="negative"):
            conditional(state, 0, 0)

    @pytest.mark.parametrize("k", [2, 3])
    def test_matches_bruteforce_on_all_states(self, k):
        token_docs = [[0, 1], [1, 2, 0]]
        bow = bow_from_token_ids(token_docs, 3)
        cfg = LdaConfig(k=k, alpha=0.7, beta=0.3, iterations=1, burn_in=0, seed=0)
        n_tokens = sum(len(d) for d in token_docs)
        positions = [(d, p) for d, doc in enumerate(token_docs) for p in range(len(doc))]
        for flat in itertools.product(range(k), repeat=n_tokens):
            assignment = [list(flat[:2]), list(flat[2:])]
            state = force_assignment(
                init_assignments(bow, cfg), assignment)
            for d, pos in positions:
                original = int(state.z[d][pos])
                state._remove(d, pos)
                wt, dt = recount(state, exclude=(d, pos))
                expected = eq3_reference(wt.tolist(), dt.tolist(), d,
                                         int(state.docs[d][pos]),
                                         cfg.effective_alpha, cfg.beta, 3, k)
                got = conditional(state, d, pos)
                assert np.abs(got - np.array(expected)).max() <= 1e-12
                state._add(d, pos, original)

    def test_sums_to_one_on_random_states(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            docs = random_corpus(rng, n_docs=5)
            dictionary = build_dictionary(docs, min_count=1)
            bow = BowCorpus.from_documents(docs, dictionary)
            state = init_assignments(bow, LdaConfig(k=3, iterations=1, burn_in=0,
                                                    seed=trial))
            d = int(rng.integers(state.num_documents))
            if len(state.docs[d]) == 0:
                continue
            pos = int(rng.integers(len(state.docs[d])))
            state._remove(d, pos)
            p = conditional(state, d, pos)
            assert abs(p.sum() - 1.0) < 1e-12
            assert (p > 0).all()


class TestGibbsSweep:
    def test_count_conservation_over_sweeps(self):
        rng = np.random.default_rng(12)
        docs = random_corpus(rng, n_docs=15)
        dictionary = build_dictionary(docs, min_count=1)
        bow = BowCorpus.from_documents(docs, dictionary)
        state = init_assignments(bow, LdaConfig(k=4, iterations=1, burn_in=0, seed=2))
        word_freq = state.word_topic.sum(axis=1).copy()
        for _ in range(10):
            gibbs_sweep(state)
            wt, dt = recount(state)
            assert (wt == state.word_topic).all()
            assert (dt == state.doc_topic).all()
            assert (state.word_topic.sum(axis=1) == word_freq).all()
            assert (state.word_topic.sum(axis=0) == state.doc_topic.sum(axis=0)).all()

    def test_seed_reproducibility(self):
        docs, _ = planted_corpus(n_docs=40, core_size=4, noise_size=6, doc_len=5)
        dictionary = build_dictionary(docs, min_count=1)
        bow = BowCorpus.from_documents(docs, dictionary)
        cfg = LdaConfig(k=3, iterations=5, burn_in=1, seed=42)
        a = train_lda(bow, cfg)
        b = train_lda(bow, cfg)
        assert (a.word_topic == b.word_topic).all()

    def test_log_likelihood_trend_on_planted_corpus(self):
        docs, _ = planted_corpus(k=2, n_docs=60, core_size=5, noise_size=4,
                                 doc_len=6, seed=3)
        dictionary = build_dictionary(docs, min_count=1)
        bow = BowCorpus.from_documents(docs, dictionary)
        cfg = LdaConfig(k=2, alpha=0.5, beta=0.01, iterations=1, burn_in=0, seed=3)
        state = init_assignments(bow, cfg)

        def log_p_w_given_z():
            # Dirichlet-multinomial marginal of the words given assignments.
            v, k = state.word_topic.shape
            beta = cfg.beta
            total = k * (math.lgamma(v * beta) - v * math.lgamma(beta))
            for j in range(k):
                total += sum(math.lgamma(state.word_topic[w, j] + beta)
                             for w in range(v))
                total -= math.lgamma(state.topic_totals[j] + v * beta)
            return total

        lls = []
        for _ in range(40):
            gibbs_sweep(state)
            lls.append(log_p_w_given_z())
        assert np.median(lls[-10:]) >= np.median(lls[:10])


class TestEstimates:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(5)
        docs = random_corpus(rng, n_docs=9)
        dictionary = build_dictionary(docs, min_count=1)
        bow = BowCorpus.from_documents(docs, dictionary)
        state = init_assignments(bow, LdaConfig(k=4, iterations=1, burn_in=0, seed=8))
        tau = estimate_tau(state).tau
        theta = estimate_theta(state).theta
        assert np.abs(tau.sum(axis=1) - 1.0).max() < 1e-9
        assert np.abs(theta.sum(axis=1) - 1.0).max() < 1e-9
        assert (tau > 0).all()

    def test_model_payload_roundtrip(self, tiny_bow):
        cfg = LdaConfig(k=2, iterations=3, burn_in=1, seed=0)
        state = train_lda(tiny_bow, cfg)
        tau = estimate_tau(state)
        payload = lda_model_payload(cfg, tau, tiny_bow.dictionary)
        assert payload["format"] == "lda/1"
        tau2, dictionary, hyper = load_lda_model(payload)
        assert np.allclose(tau2.tau, tau.tau)
        assert dictionary.tokens == tiny_bow.dictionary.tokens
        assert hyper["k"] == 2


class TestTopWords:
    def test_delta_distribution(self):
        tau = TopicWordDistribution(np.array([[0.0, 1.0, 0.0]]))
        assert top_words(tau, 0, 1) == [1]

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(11)
        row = rng.random(30)
        tau = TopicWordDistribution((row / row.sum())[None, :])
        expected = sorted(range(30), key=lambda w: (-tau.tau[0, w], w))
        assert top_words(tau, 0, 30) == expected

    def test_ties_break_by_index_and_clamp(self):
        tau = TopicWordDistribution(np.full((1, 4), 0.25))
        assert top_words(tau, 0, 10) == [0, 1, 2, 3]


class TestCoherence:
    def _corpus(self, token_docs, vocab_size):
        return bow_from_token_ids(token_docs, vocab_size)

    def test_always_cooccurring_pair(self):
        # Words 0 and 1 appear together in exactly two documents:
        # term = log((2 + 1) / docfreq(w1) = 2) = log(1.5).
        bow = self._corpus([[0, 1], [0, 1], [0, 2]], 3)
        tau = TopicWordDistribution(np.array([[0.6, 0.3, 0.1]]))
        result = coherence(tau, bow, top_n=2)
        assert result.per_topic[0] == pytest.approx(math.log(3 / 2), abs=1e-12)

    def test_top_n_one_is_empty_sum(self):
        bow = self._corpus([[0, 1]], 2)
        tau = TopicWordDistribution(np.array([[0.7, 0.3]]))
        assert coherence(tau, bow, top_n=1).per_topic[0] == 0.0

    def test_disjoint_words_negative(self):
        # Words 0 and 1 never co-occur; each appears in three documents:
        # term = log((0 + 1) / 3).
        bow = self._corpus([[0], [0], [0], [1], [1], [1]], 2)
        tau = TopicWordDistribution(np.array([[0.7, 0.3]]))
        result = coherence(tau, bow, top_n=2)
        assert result.per_topic[0] == pytest.approx(math.log(1 / 3), abs=1e-12)

    def test_three_word_hand_count(self):
        # docs: {0,1} x2, {0,2}. Ranked [0, 1, 2]:
        # (0,1): log((2+1)/df1=2), (0,2): log((1+1)/df2=1), (1,2): log((0+1)/1)
        bow = self._corpus([[0, 1], [0, 1], [0, 2]], 3)
        tau = TopicWordDistribution(np.array([[0.5, 0.3, 0.2]]))
        expected = math.log(3 / 2) + math.log(2 / 1) + math.log(1 / 1)
        assert coherence(tau, bow, top_n=3).per_topic[0] == pytest.approx(expected, abs=1e-12)

    def test_degenerate_topic_flagged(self):
        # Vocabulary has a word that never occurs in the scored corpus.
        dictionary = Dictionary(["w00", "w01", "w02"], 1)
        docs = [TokenizedDocument("d0", ("w00", "w01"))]
        bow = BowCorpus.from_documents(docs, dictionary)
        tau = TopicWordDistribution(np.array([[0.1, 0.2, 0.7]]))
        result = coherence(tau, bow, top_n=2)
        assert result.degenerate == (0,)
        assert result.per_topic[0] == -np.inf


class TestSelectK:
    def test_single_candidate(self, tiny_bow):
        cfg = LdaConfig(k=2, iterations=3, burn_in=1, seed=0)
        best, scores = select_k(tiny_bow, [3], cfg, top_n=2)
        assert best == 3
        assert len(scores) == 1

    def test_score_list_matches_candidates(self, tiny_bow):
        cfg = LdaConfig(k=2, iterations=3, burn_in=1, seed=0)
        best, scores = select_k(tiny_bow, [2, 3, 4], cfg, top_n=2)
        assert len(scores) == 3
        assert best in (2, 3, 4)

    def test_planted_recovery_is_covered_by_acceptance(self):
        # The statistically meaningful 4-of-5-seeds check runs in the
        # acceptance suite; here a single fast seed sanity-checks wiring.
        docs, _ = planted_corpus(k=2, n_docs=80, core_size=5, noise_size=6,
                                 doc_len=6, seed=1)
        dictionary = build_dictionary(docs, min_count=1)
        bow = BowCorpus.from_documents(docs, dictionary)
        cfg = LdaConfig(k=2, alpha=0.5, iterations=30, burn_in=5, seed=1)
        best, _ = select_k(bow, [2, 6], cfg, top_n=5)
        assert best == 2

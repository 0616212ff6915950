import math

import numpy as np
import pytest

from curio import topicmodel as tm
from curio.novelty import hellinger

from conftest import synthetic_lda_corpus


def aligned_hellinger(model, true_phi, words):
    """Greedy minimal-distance topic matching; mean Hellinger of matched pairs."""
    learned = model.phi()[:, [model.vocab[w] for w in words]]
    K = true_phi.shape[0]
    dist = np.array([[hellinger(learned[i], true_phi[j]) for j in range(K)] for i in range(K)])
    used_i, used_j, matched = set(), set(), []
    for flat in np.argsort(dist, axis=None):
        i, j = divmod(int(flat), K)
        if i not in used_i and j not in used_j:
            used_i.add(i)
            used_j.add(j)
            matched.append(dist[i, j])
    return float(np.mean(matched))


def _hand_model(counts, vocab_words, beta=0.01):
    counts = np.asarray(counts, dtype=np.int64)
    return tm.TopicModel(num_topics=counts.shape[0], alpha=0.5, beta=beta,
                         vocab={w: i for i, w in enumerate(vocab_words)},
                         topic_word_counts=counts, topic_totals=counts.sum(axis=1))


@pytest.fixture(scope="module")
def model(lda_corpus):
    docs, _, _ = lda_corpus
    return tm.train(docs, 3, iterations=200, seed=7)


def test_synthetic_recovery(model, lda_corpus):
    _, phi, words = lda_corpus
    assert aligned_hellinger(model, phi, words) <= 0.2


def test_count_invariants_every_sweep(lda_corpus):
    docs, _, _ = lda_corpus
    n_tokens = sum(len(tm.lda_tokens(d)) for d in docs[:100])
    seen = []

    def check(sweep, counts, totals):
        np.testing.assert_array_equal(counts.sum(axis=1), totals)
        assert totals.sum() == n_tokens
        assert (counts >= 0).all()
        seen.append(sweep)

    tm.train(docs[:100], 3, iterations=15, seed=1, on_sweep=check)
    assert seen == list(range(16))


def test_phi_rows_sum_to_one(model):
    np.testing.assert_allclose(model.phi().sum(axis=1), 1.0, atol=1e-9)


def test_train_deterministic(lda_corpus):
    docs = lda_corpus[0][:80]
    a = tm.train(docs, 3, iterations=20, seed=7)
    b = tm.train(docs, 3, iterations=20, seed=7)
    np.testing.assert_array_equal(a.topic_word_counts, b.topic_word_counts)
    c = tm.train(docs, 3, iterations=20, seed=8)
    assert not np.array_equal(a.topic_word_counts, c.topic_word_counts)


def test_train_rejects_bad_inputs():
    with pytest.raises(ValueError, match="empty"):
        tm.train([["the", "a", "of"], ["x"]], 2, iterations=1)
    with pytest.raises(ValueError, match="exceed"):
        tm.train([["alpha", "beta"]], 3, iterations=1)
    with pytest.raises(ValueError):
        tm.train([["alpha", "beta"]], 1, iterations=1)


def test_preprocessing_drops_stop_words_and_short_tokens():
    assert tm.lda_tokens(["the", "cat", "a", "x", "sat", "on", "mat"]) == ["cat", "sat", "mat"]
    m = tm.train([["the", "cat", "sat"], ["dog", "on", "mat"]], 2, iterations=2)
    assert "the" not in m.vocab and "on" not in m.vocab


def test_infer_single_topic_headline(lda_corpus):
    # with the default alpha = 50 / K a 20-token document cannot exceed
    # (20 + 16.7) / (20 + 50) mass on one topic, so use a sparse prior here
    docs, phi, words = lda_corpus
    model = tm.train(docs, 3, alpha=0.1, iterations=200, seed=7)
    learned = model.phi()[:, [model.vocab[w] for w in words]]
    for k in range(3):
        block = words[k * 10:(k + 1) * 10]
        theta = tm.infer(model, block * 2, fold_in_iterations=50, seed=3)
        target = int(np.argmin([hellinger(learned[i], phi[k]) for i in range(3)]))
        assert theta[target] >= 0.8
        assert abs(theta.sum() - 1) < 1e-9 and (theta > 0).all()


def test_infer_sentinels(model):
    uniform = np.full(3, 1 / 3)
    np.testing.assert_array_equal(tm.infer(model, ["zzz", "qqq"]), uniform)
    np.testing.assert_array_equal(tm.infer(model, []), uniform)


def test_infer_deterministic(model):
    toks = ["word01", "word12", "word25", "word03"]
    np.testing.assert_array_equal(tm.infer(model, toks, seed=4), tm.infer(model, toks, seed=4))


def test_infer_many_rows_are_distributions(model, lda_corpus):
    thetas = tm.infer_many(model, lda_corpus[0][:50], fold_in_iterations=8)
    np.testing.assert_allclose(thetas.sum(axis=1), 1.0, atol=1e-9)


def _umass_bruteforce(top, docs):
    sets = [set(d) for d in docs]
    score = 0.0
    for i in range(1, len(top)):
        for j in range(i):
            dj = sum(top[j] in s for s in sets)
            co = sum(top[i] in s and top[j] in s for s in sets)
            score += math.log((co + 1) / dj)
    return score


def test_coherence_hand_computed():
    words = ["apple", "banana", "cherry"]
    m = _hand_model([[5, 3, 0], [2, 0, 5]], words)
    docs = [["apple", "banana"], ["apple", "banana", "cherry"]]
    assert tm.top_words(m, 0, 2) == ["apple", "banana"]
    assert tm.top_words(m, 1, 2) == ["cherry", "apple"]
    expected = (_umass_bruteforce(["apple", "banana"], docs)
                + _umass_bruteforce(["cherry", "apple"], docs)) / 2
    assert expected == pytest.approx(0.5 * math.log(3), abs=1e-15)
    assert tm.coherence(m, docs, top_n=2) == pytest.approx(expected, abs=1e-12)


def test_coherence_identical_topics_identical_scores():
    m = _hand_model([[4, 2, 1], [4, 2, 1]], ["apple", "banana", "cherry"])
    docs = [["apple", "banana"], ["banana", "cherry"], ["apple"]]
    a, b = tm.coherence(m, docs, top_n=3, per_topic=True)
    assert a == b


def test_coherence_rejects_small_top_n(model, lda_corpus):
    with pytest.raises(ValueError):
        tm.coherence(model, lda_corpus[0], top_n=1)


def test_coherence_stable_under_document_duplication(model):
    big, _, _ = synthetic_lda_corpus(n_docs=5000, seed=11)
    once = tm.coherence(model, big, top_n=5)
    twice = tm.coherence(model, big + big, top_n=5)
    assert once < 0
    assert abs(once - twice) <= 0.01


def test_select_num_topics_tie_break_and_single(lda_corpus):
    docs = lda_corpus[0][:60]
    best, table = tm.select_num_topics(docs, [3], iterations=5)
    assert best == 3 and [k for k, _ in table] == [3]
    # every document holds every word: all topics score the same, so the smallest K wins
    flat = [["red", "green", "blue"]] * 3
    best, table = tm.select_num_topics(flat, [3, 2], iterations=3, top_n=3)
    assert table[0][1] == pytest.approx(table[1][1], rel=1e-12)
    assert best == 2


def test_top_words_ties_and_bounds():
    m = _hand_model([[3, 3, 1]], ["pear", "fig", "kiwi"] )
    assert tm.top_words(m, 0, 2) == ["fig", "pear"]
    assert tm.top_words(m, 0, 10) == ["fig", "pear", "kiwi"]
    with pytest.raises(IndexError):
        tm.top_words(m, 1, 2)


def test_top_words_dominant_word(model, lda_corpus):
    _, phi, words = lda_corpus
    learned = model.phi()[:, [model.vocab[w] for w in words]]
    for k in range(3):
        i = int(np.argmin([hellinger(learned[r], phi[k]) for r in range(3)]))
        assert tm.top_words(model, i, 1)[0] == words[int(np.argmax(phi[k]))]


def test_serialization_round_trip(tmp_path, model):
    path = tmp_path / "m.bin"
    model.save(path)
    back = tm.load_model(path)
    assert back.vocab == model.vocab
    assert (back.alpha, back.beta, back.rng_seed) == (model.alpha, model.beta, model.rng_seed)
    np.testing.assert_array_equal(back.topic_word_counts, model.topic_word_counts)
    back.save(tmp_path / "again.bin")
    assert (tmp_path / "again.bin").read_bytes() == path.read_bytes()
    assert path.read_bytes()[:8] == b"CURIOTM1"
    assert (tmp_path / "m.bin.json").exists()


def test_load_rejects_wrong_magic(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTAMODEL" + bytes(64))
    with pytest.raises(ValueError, match="CURIOTM1"):
        tm.load_model(p)

import math

import numpy as np
import pytest

from curio import classifier as clf
from curio.corpus import Headline, reference_from_texts
from curio.infogap import LexiconSet
from curio.novelty import exposure
from curio.surprise import build_table
from curio.topicmodel import train


def separable(n=80, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(size=(n, 2)) + np.where(y[:, None] == 1, 3.0, -3.0)
    return X, y.astype(float)


def test_logreg_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(10):
        X = rng.normal(size=(30, 4))
        y = (rng.random(30) < 0.5).astype(float)
        w, b, l2 = rng.normal(size=4), float(rng.normal()), 0.3
        gw, gb = clf.logreg_gradient(w, b, X, y, l2)
        h = 1e-6
        num = np.empty(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            num[j] = (clf.logreg_objective(w + e, b, X, y, l2)
                      - clf.logreg_objective(w - e, b, X, y, l2)) / (2 * h)
        nb = (clf.logreg_objective(w, b + h, X, y, l2) - clf.logreg_objective(w, b - h, X, y, l2)) / (2 * h)
        np.testing.assert_allclose(gw, num, rtol=1e-6, atol=1e-9)
        assert gb == pytest.approx(nb, rel=1e-6, abs=1e-9)


def test_logreg_objective_monotone():
    X, y = separable()
    m = clf.train_logreg(X, y, epochs=300, learning_rate=5.0)
    trace = m.training_meta["objective_trace"]
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    assert m.training_meta["final_objective"] == trace[-1]


@pytest.mark.parametrize("kind", ["logreg", "svm"])
def test_separable_training_accuracy(kind):
    X, y = separable()
    m = clf.train_model(kind, X, y, seed=3)
    _, _, labels = clf.predict_batch(m, X)
    assert np.mean(labels == y) == 1.0
    for x, t in zip(X, y):
        assert clf.predict(m, x)[2] == t


def test_logreg_constant_features_give_prior_log_odds():
    X = np.ones((40, 3))
    y = np.array([1.0] * 10 + [0.0] * 30)
    m = clf.train_logreg(X, y, epochs=2000, l2=1e-4)
    np.testing.assert_array_equal(m.weights, 0.0)
    assert m.bias == pytest.approx(math.log(10 / 30), abs=1e-6)


def test_logreg_zero_epochs():
    X, y = separable()
    m = clf.train_logreg(X, y, epochs=0)
    assert (m.weights == 0).all() and m.bias == 0
    assert clf.predict(m, X[0]) == (0.0, 0.5, 1)


def test_svm_deterministic_and_objective_decreases():
    X, y = separable(seed=4)
    a = clf.train_svm(X, y, iterations=5000, seed=9)
    b = clf.train_svm(X, y, iterations=5000, seed=9)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert a.bias == b.bias
    assert a.training_meta["final_objective"] <= a.training_meta["initial_objective"]


def test_training_preconditions():
    X, y = separable()
    with pytest.raises(ValueError):
        clf.train_svm(X, np.ones_like(y))
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        clf.train_logreg(bad, y)


@pytest.mark.parametrize("kind", ["logreg", "svm"])
def test_standardization_absorbs_affine_rescaling(kind):
    X, y = separable(n=120, seed=5)
    train_rows, test_rows = slice(0, None, 2), slice(1, None, 2)
    base = clf.train_model(kind, X[train_rows], y[train_rows], seed=1)
    Xr = X * np.array([1024.0, 0.125]) + np.array([3.0, -7.5])
    scaled = clf.train_model(kind, Xr[train_rows], y[train_rows], seed=1)
    np.testing.assert_array_equal(clf.predict_batch(base, X[test_rows])[2],
                                  clf.predict_batch(scaled, Xr[test_rows])[2])


def test_predict_conventions():
    m = clf.LinearModel("svm", np.array([1.0]), 0.0, np.array([0.0]), np.array([1.0]))
    assert clf.predict(m, [0.0]) == (0.0, 0.5, 1)
    s, p, lab = clf.predict(m, [800.0])
    assert p == 1.0 and lab == 1
    assert clf.predict(m, [-800.0])[1] == 0.0
    with pytest.raises(ValueError):
        clf.predict(m, [1.0, 2.0])


def test_evaluate_hand_confusion():
    y = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    yhat = [1, 1, 1, 0, 1, 0, 0, 0, 0, 0]
    probs = [0.9, 0.8, 0.7, 0.4, 0.6, 0.1, 0.2, 0.3, 0.0, 0.5]
    rep = clf.report_from_predictions(y, yhat, probs)
    assert rep.confusion == (3, 1, 5, 1)
    assert rep.accuracy == 0.8
    assert rep.accuracy == 1 - (1 + 1) / 10
    assert rep.f1 == pytest.approx(2 * 0.75 * 0.75 / 1.5, abs=1e-12)
    naive = sum((p - t) ** 2 for p, t in zip(probs, y)) / len(y)
    assert rep.mse == pytest.approx(naive, abs=1e-12)
    assert sum(rep.confusion) == rep.n_test


def test_evaluate_perfect_and_degenerate():
    rep = clf.report_from_predictions([1, 0], [1, 0], [1.0, 0.0])
    assert (rep.accuracy, rep.f1, rep.mse) == (1.0, 1.0, 0.0)
    assert clf.report_from_predictions([0, 0], [0, 0], [0.1, 0.1]).f1 == 0.0
    with pytest.raises(ValueError):
        clf.report_from_predictions([], [], [])


def _heads(n=20):
    texts = ["you will never believe these 10 cats", "council approves budget for sydney"]
    return [Headline.from_text(i, texts[i % 2], i % 2 == 0 and 1 or 0) for i in range(n)]


def test_split_examples():
    heads = [Headline.from_text(i, f"h{i}", i % 2) for i in range(4)]
    train_, test_ = clf.split(heads, 0.5, seed=1)
    assert len(train_) == len(test_) == 2
    assert sorted(h.label for h in train_) == [0, 1] == sorted(h.label for h in test_)
    assert clf.split(heads, 0.5, seed=1) == (train_, test_)
    big = [Headline.from_text(i, "x", i % 2) for i in range(1000)]
    tr, te = clf.split(big, 0.2, seed=0)
    assert (len(tr), len(te)) == (200, 800)
    assert sum(h.label for h in tr) == 100
    with pytest.raises(ValueError):
        clf.split(heads, 1.0)
    with pytest.raises(ValueError):
        clf.split([Headline.from_text(0, "a", 1), Headline.from_text(1, "b", 0)], 0.5)


@pytest.fixture(scope="module")
def resources():
    ref = reference_from_texts(["council approves budget for sydney", "police probe crash in perth",
                                "budget for new rail in sydney"] * 5)
    model = train(ref, 2, iterations=10, seed=0)
    return clf.Resources(topic_model=model, exposure=exposure(model, ref, fold_in_iterations=8),
                         bigram_table=build_table(ref), lexicons=LexiconSet.fallback(),
                         fold_in_iterations=8)


def test_featurize_dimensions(resources):
    heads = _heads(6)
    assert [len(v.values) for v in clf.featurize(heads, "novelty", resources)] == [2] * 6
    vecs = clf.featurize(heads, "all", resources)
    assert len(vecs[0].values) == 18 == 2 + 2 + 14
    assert vecs[0].schema == clf.SCHEMAS["all"]
    assert clf.featurize([], "all", resources) == []


def test_featurize_missing_resource_named():
    with pytest.raises(ValueError, match="bigram_table"):
        clf.featurize(_heads(2), "surprise", clf.Resources())
    with pytest.raises(ValueError, match="topic_model"):
        clf.featurize(_heads(2), "all", clf.Resources(lexicons=LexiconSet.fallback()))


def test_model_json_round_trip(tmp_path):
    X, y = separable()
    m = clf.train_logreg(X, y, epochs=20, schema=("a", "b"))
    m.save(tmp_path / "m.json")
    back = clf.LinearModel.load(tmp_path / "m.json")
    np.testing.assert_array_equal(back.weights, m.weights)
    assert back.bias == m.bias and back.schema == ("a", "b")
    back.save(tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == (tmp_path / "m.json").read_bytes()
    obj = m.to_json()
    obj["schema_version"] = 99
    with pytest.raises(ValueError, match="schema version"):
        clf.LinearModel.from_json(obj)


def test_format_table_layout():
    rep = clf.EvalReport(0.9717, 0.9713, 0.113, (1, 0, 1, 0), 2)
    text = clf.format_table([("logreg", "all", rep)])
    assert text.splitlines()[0].split() == ["Model", "Features", "Accuracy", "F1-Score", "MSE"]
    assert "LogReg" in text and "All features" in text and "0.9717" in text

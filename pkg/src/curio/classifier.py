"""Feature assembly, linear classifiers and evaluation.

Both model kinds standardize features with statistics fitted on the training
rows only. Probabilities are ``sigmoid(score)`` for both kinds (for the SVM
this is a convenience, not a calibrated estimate), and MSE is computed on
those probabilities rather than on hard labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import infogap
from .novelty import ExposureDistribution, novelty_features
from .surprise import TABLE_VERSION, BigramTable, surprise_features
from .topicmodel import DEFAULT_FOLD_IN, MAGIC, TopicModel, infer_many

SCHEMA_VERSION = 1
NOVELTY = ("kl", "hellinger")
SURPRISE = ("zero_run", "max_nonzero")
INFOGAP = infogap.FIELDS
SCHEMAS = {
    "novelty": NOVELTY,
    "surprise": SURPRISE,
    "infogap": INFOGAP,
    "all": NOVELTY + SURPRISE + INFOGAP,
}


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema: tuple[str, ...]

    def __post_init__(self):
        if len(self.values) != len(self.schema):
            raise ValueError("values and schema lengths differ")


@dataclass
class Resources:
    """Everything featurize may need; unneeded members can stay None."""

    topic_model: TopicModel | None = None
    exposure: ExposureDistribution | None = None
    bigram_table: BigramTable | None = None
    lexicons: infogap.LexiconSet | None = None
    rules: infogap.RuleConfig | None = None
    fold_in_iterations: int = DEFAULT_FOLD_IN
    infer_seed: int = 0


def _require(resources: Resources, *names: str) -> None:
    for name in names:
        if getattr(resources, name) is None:
            raise ValueError(f"missing resource {name!r} for the requested feature set")


def feature_blocks(headlines, feature_set: str, resources: Resources) -> dict[str, np.ndarray]:
    """Compute each needed block as an (n, width) float array."""
    if feature_set not in SCHEMAS:
        raise ValueError(f"unknown feature set {feature_set!r}")
    n = len(headlines)
    blocks = {}
    if feature_set in ("novelty", "all"):
        _require(resources, "topic_model", "exposure")
        dists = infer_many(resources.topic_model, [h.tokens for h in headlines],
                           resources.fold_in_iterations, resources.infer_seed)
        blocks["novelty"] = np.array([novelty_features(d, resources.exposure) for d in dists],
                                     dtype=np.float64).reshape(n, 2)
    if feature_set in ("surprise", "all"):
        _require(resources, "bigram_table")
        blocks["surprise"] = np.array([surprise_features(resources.bigram_table, h.tokens)
                                       for h in headlines], dtype=np.float64).reshape(n, 2)
    if feature_set in ("infogap", "all"):
        _require(resources, "lexicons")
        blocks["infogap"] = np.array(
            [infogap.extract(h, resources.lexicons, resources.rules).values() for h in headlines],
            dtype=np.float64).reshape(n, len(INFOGAP))
    return blocks


def feature_matrix(headlines, feature_set: str, resources: Resources) -> np.ndarray:
    blocks = feature_blocks(headlines, feature_set, resources)
    order = ["novelty", "surprise", "infogap"]
    return np.hstack([blocks[b] for b in order if b in blocks])


def featurize(headlines, feature_set: str, resources: Resources) -> list[FeatureVector]:
    schema = SCHEMAS.get(feature_set)
    if schema is None:
        raise ValueError(f"unknown feature set {feature_set!r}")
    if not headlines:
        return []
    X = feature_matrix(headlines, feature_set, resources)
    return [FeatureVector(tuple(float(v) for v in row), schema) for row in X]


def split(headlines, train_fraction: float = 0.2, seed: int = 0):
    """Stratified shuffled split; both sides keep input order."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    train_idx: list[int] = []
    labels = sorted({h.label for h in headlines if h.label is not None})
    if any(h.label is None for h in headlines):
        raise ValueError("every headline needs a label to be split")
    for lab in labels:
        idx = np.array([i for i, h in enumerate(headlines) if h.label == lab])
        n_train = int(round(train_fraction * len(idx)))
        if n_train < 1 or n_train > len(idx) - 1:
            raise ValueError(f"class {lab} has too few samples for a {train_fraction} split")
        train_idx.extend(rng.permutation(idx)[:n_train].tolist())
    if len(labels) < 2:
        raise ValueError("split needs both classes present")
    chosen = set(train_idx)
    train = [h for i, h in enumerate(headlines) if i in chosen]
    test = [h for i, h in enumerate(headlines) if i not in chosen]
    return train, test


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


@dataclass
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    means: np.ndarray
    stds: np.ndarray
    schema: tuple[str, ...] = ()
    training_meta: dict = field(default_factory=dict)

    def standardize(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) / self.stds

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.shape[0]:
            raise ValueError(f"expected {self.weights.shape[0]} features, got {X.shape[1]}")
        return self.standardize(X) @ self.weights + self.bias

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "schema": list(self.schema),
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "standardization": [[float(m), float(s)] for m, s in zip(self.means, self.stds)],
            "training_meta": self.training_meta,
            "artifact_versions": {"topic_model": MAGIC.decode(), "bigram_table": TABLE_VERSION},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearModel":
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"model schema version {obj.get('schema_version')} != {SCHEMA_VERSION}")
        std = np.asarray(obj["standardization"], dtype=np.float64).reshape(-1, 2)
        return cls(kind=obj["kind"], weights=np.asarray(obj["weights"], dtype=np.float64),
                   bias=float(obj["bias"]), means=std[:, 0].copy(), stds=std[:, 1].copy(),
                   schema=tuple(obj.get("schema", ())), training_meta=obj.get("training_meta", {}))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def _prepare(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    if not (np.any(y == 1) and np.any(y == 0)) or not np.all((y == 0) | (y == 1)):
        raise ValueError("training needs 0/1 labels with both classes present")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds[stds == 0] = 1.0
    return (X - means) / stds, y, means, stds


def logreg_objective(w, b, Xs, y, l2):
    """Mean negative log-likelihood plus (l2 / 2) * ||w||^2; the bias is not penalized."""
    z = Xs @ w + b
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(nll + 0.5 * l2 * np.dot(w, w))


def logreg_gradient(w, b, Xs, y, l2):
    r = sigmoid(Xs @ w + b) - y
    return Xs.T @ r / len(y) + l2 * w, float(np.mean(r))


def train_logreg(X, y, epochs: int = 500, learning_rate: float = 0.1, l2: float = 1e-4,
                 seed: int = 0, schema: Sequence[str] = ()) -> LinearModel:
    """Full-batch gradient descent; each step halves until the objective does not rise.

    ``seed`` is recorded only: the procedure itself is deterministic.
    """
    Xs, y, means, stds = _prepare(X, y)
    w = np.zeros(Xs.shape[1])
    b = 0.0
    obj = logreg_objective(w, b, Xs, y, l2)
    trace = [obj]
    for _ in range(epochs):
        gw, gb = logreg_gradient(w, b, Xs, y, l2)
        step = learning_rate
        for _ in range(60):
            w_new, b_new = w - step * gw, b - step * gb
            new = logreg_objective(w_new, b_new, Xs, y, l2)
            if new <= obj:
                break
            step *= 0.5
        else:
            break
        w, b, obj = w_new, b_new, new
        trace.append(obj)
    meta = {"seed": seed, "epochs": epochs, "learning_rate": learning_rate, "l2": l2,
            "final_objective": obj, "objective_trace": trace}
    return LinearModel("logreg", w, b, means, stds, tuple(schema), meta)


def svm_objective(w, b, Xs, y, lam):
    """(lam / 2) * ||[w, b]||^2 + mean hinge loss, labels in {0, 1}."""
    s = 2.0 * y - 1.0
    hinge = np.maximum(0.0, 1.0 - s * (Xs @ w + b))
    return float(0.5 * lam * (np.dot(w, w) + b * b) + hinge.mean())


def train_svm(X, y, iterations: int = 100_000, lam: float = 1e-4, seed: int = 0,
              schema: Sequence[str] = ()) -> LinearModel:
    """Pegasos on the hinge loss; returns the average of the second-half iterates.

    The bias is handled as a weight on a constant feature, so it is regularized too.
    """
    Xs, y, means, stds = _prepare(X, y)
    n, d = Xs.shape
    A = np.hstack([Xs, np.ones((n, 1))])
    s = 2.0 * y - 1.0
    rng = np.random.Generator(np.random.PCG64(seed))
    picks = rng.integers(0, n, size=iterations)
    radius = 1.0 / math.sqrt(lam)
    w = np.zeros(d + 1)
    avg = np.zeros(d + 1)
    n_avg = 0
    half = iterations // 2
    for t in range(1, iterations + 1):
        i = picks[t - 1]
        eta = 1.0 / (lam * t)
        margin = s[i] * (A[i] @ w)
        w *= 1.0 - eta * lam
        if margin < 1.0:
            w += (eta * s[i]) * A[i]
        norm = math.sqrt(w @ w)
        if norm > radius:
            w *= radius / norm
        if t > half:
            avg += w
            n_avg += 1
    if n_avg:
        w = avg / n_avg
    initial = svm_objective(np.zeros(d), 0.0, Xs, y, lam)
    final = svm_objective(w[:d], w[d], Xs, y, lam)
    meta = {"seed": seed, "iterations": iterations, "lambda": lam,
            "initial_objective": initial, "final_objective": final}
    return LinearModel("svm", w[:d].copy(), float(w[d]), means, stds, tuple(schema), meta)


def train_model(kind: str, X, y, seed: int = 0, schema: Sequence[str] = (), **hyper) -> LinearModel:
    if kind == "logreg":
        return train_logreg(X, y, seed=seed, schema=schema, **hyper)
    if kind == "svm":
        return train_svm(X, y, seed=seed, schema=schema, **hyper)
    raise ValueError(f"unknown model kind {kind!r}")


def predict(model: LinearModel, vector) -> tuple[float, float, int]:
    values = vector.values if isinstance(vector, FeatureVector) else vector
    score = float(model.decision(values)[0])
    return score, float(sigmoid(score)), int(score >= 0)


def predict_batch(model: LinearModel, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scores = model.decision(X)
    return scores, sigmoid(scores), (scores >= 0).astype(np.int64)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    f1: float
    mse: float
    confusion: tuple[int, int, int, int]  # tp, fp, tn, fn
    n_test: int

    @property
    def precision(self) -> float:
        tp, fp, _, _ = self.confusion
        return tp / (tp + fp) if tp + fp else 0.0

    @property
    def recall(self) -> float:
        tp, _, _, fn = self.confusion
        return tp / (tp + fn) if tp + fn else 0.0

    def to_json(self) -> dict:
        tp, fp, tn, fn = self.confusion
        return {"accuracy": self.accuracy, "f1": self.f1, "mse": self.mse,
                "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn}, "n_test": self.n_test}

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        c = obj["confusion"]
        return cls(obj["accuracy"], obj["f1"], obj["mse"], (c["tp"], c["fp"], c["tn"], c["fn"]),
                   obj["n_test"])


def report_from_predictions(labels, predicted, probs) -> EvalReport:
    y = np.asarray(labels, dtype=np.int64)
    yhat = np.asarray(predicted, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    if y.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty test set")
    tp = int(np.sum((yhat == 1) & (y == 1)))
    fp = int(np.sum((yhat == 1) & (y == 0)))
    tn = int(np.sum((yhat == 0) & (y == 0)))
    fn = int(np.sum((yhat == 0) & (y == 1)))
    n = len(y)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    mse = float(np.mean((probs - y) ** 2))
    return EvalReport((tp + tn) / n, f1, mse, (tp, fp, tn, fn), n)


def evaluate(model: LinearModel, X, y) -> EvalReport:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty test set")
    _, probs, labels = predict_batch(model, X)
    return report_from_predictions(y, labels, probs)


_KIND_NAMES = {"svm": "SVM", "logreg": "LogReg"}
_SET_NAMES = {"novelty": "Novelty", "surprise": "Surprise", "infogap": "Info-gap",
              "all": "All features"}


def format_table(rows: Sequence[tuple[str, str, EvalReport]]) -> str:
    """Render (kind, feature_set, report) rows as a Model/Features/Accuracy/F1/MSE table."""
    header = f"{'Model':<8} {'Features':<14} {'Accuracy':>9} {'F1-Score':>9} {'MSE':>8}"
    lines = [header, "-" * len(header)]
    for kind, fset, rep in rows:
        lines.append(f"{_KIND_NAMES.get(kind, kind):<8} {_SET_NAMES.get(fset, fset):<14} "
                     f"{rep.accuracy:>9.4f} {rep.f1:>9.4f} {rep.mse:>8.4f}")
    return "\n".join(lines)

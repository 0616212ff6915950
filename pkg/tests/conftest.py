import json
import random

import numpy as np
import pytest


def synthetic_lda_corpus(n_docs=500, doc_len=40, V=30, K=3, doc_alpha=0.1, seed=0):
    """Corpus sampled from a known topic-word matrix.

    Topic k puts most of its mass on its own block of V // K words.
    """
    rng = np.random.default_rng(seed)
    words = [f"word{j:02d}" for j in range(V)]
    block = V // K
    phi = np.full((K, V), 0.05 / (V - block))
    for k in range(K):
        phi[k, k * block:(k + 1) * block] = rng.dirichlet(np.full(block, 5.0)) * 0.95
    phi /= phi.sum(axis=1, keepdims=True)
    docs = []
    for _ in range(n_docs):
        theta = rng.dirichlet(np.full(K, doc_alpha))
        z = rng.choice(K, size=doc_len, p=theta)
        docs.append([words[rng.choice(V, p=phi[k])] for k in z])
    return docs, phi, words


@pytest.fixture(scope="session")
def lda_corpus():
    return synthetic_lda_corpus()


CLICKBAIT_TEMPLATES = [
    "{n} things you will never believe about {a}",
    "which {a} are you",
    "you wont believe what this {a} did",
    "{n} reasons why your {a} is secretly amazing",
    "this is what happens when you {v} your {a}",
    "can you guess which {a} will make you cry",
]
NEWS_TEMPLATES = [
    "government announces {p} reform for {c}",
    "police investigate {p} incident in {c}",
    "council approves {p} budget for {c}",
    "minister to visit {c} for {p} talks",
    "{c} farmers face {p} drought",
    "court hears {p} case against {c} council",
]
_FILL = {
    "a": ["cat", "dog", "celebrity", "zodiac", "pizza", "hair", "friend", "horoscope", "song"],
    "v": ["feed", "hug", "text", "call", "paint"],
    "p": ["water", "health", "housing", "mining", "transport", "tax", "rail", "energy"],
    "c": ["sydney", "perth", "adelaide", "darwin", "hobart", "brisbane", "canberra"],
}


def _fill(template, rng):
    return template.format(n=rng.choice(["5", "10", "17", "21"]),
                           **{k: rng.choice(v) for k, v in _FILL.items()})


@pytest.fixture(scope="session")
def toy_data(tmp_path_factory):
    """A small labeled dataset plus an ABC-style reference corpus on disk."""
    rng = random.Random(3)
    root = tmp_path_factory.mktemp("toy")
    with (root / "headlines.jsonl").open("w") as fh:
        for i in range(240):
            label = i % 2
            tpl = rng.choice(CLICKBAIT_TEMPLATES if label else NEWS_TEMPLATES)
            fh.write(json.dumps({"text": _fill(tpl, rng), "label": label}) + "\n")
    with (root / "abc.csv").open("w") as fh:
        fh.write("publish_date,headline_text\n")
        for i in range(600):
            month = 1 + i % 12
            year = 2014 if month >= 9 else 2015
            fh.write(f"{year}{month:02d}{1 + i % 28:02d},{_fill(rng.choice(NEWS_TEMPLATES), rng)}\n")
        fh.write("notadate,broken row\n")
    return root


def toy_config(root, out, **over):
    cfg = {
        "datasets": [{"path": str(root / "headlines.jsonl"), "format": "jsonl"}],
        "reference": {"path": str(root / "abc.csv"),
                      "topic_window": ["2014-09-01", "2015-09-30"], "surprise_window": None},
        "topics": {"num_topics": 4, "iterations": 30, "fold_in_iterations": 12},
        "feature_set": "all",
        "model": {"kind": "logreg", "params": {"epochs": 200}},
        "train_fraction": 0.2,
        "seed": 5,
        "output_dir": str(out),
    }
    cfg.update(over)
    return cfg


def pytest_configure(config):
    config.curio_acceptance = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "curio_acceptance", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

"""LDA by collapsed Gibbs sampling, fold-in inference, UMass coherence.

Topic training drops a fixed stop list and one-character tokens; every
other feature family sees the unfiltered token stream.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .corpus import ReferenceCorpus

# NLTK's classic 127-word English list.
STOP_WORDS = frozenset("""
i me my myself we our ours ourselves you your yours yourself yourselves he him
his himself she her hers herself it its itself they them their theirs themselves
what which who whom this that these those am is are was were be been being have
has had having do does did doing a an the and but if or because as until while
of at by for with about against between into through during before after above
below to from up down in out on off over under again further then once here
there when where why how all any both each few more most other some such no nor
not only own same so than too very s t can will just don should now
""".split())

MAGIC = b"CURIOTM1"
DEFAULT_BETA = 0.01
DEFAULT_SWEEPS = 500
DEFAULT_FOLD_IN = 50
_CHUNK_DOCS = 4096


def default_alpha(num_topics: int) -> float:
    return 50.0 / num_topics


def lda_tokens(tokens: Iterable[str]) -> list[str]:
    return [t for t in tokens if len(t) > 1 and t not in STOP_WORDS]


@dataclass
class TopicModel:
    num_topics: int
    alpha: float
    beta: float
    vocab: dict[str, int]
    topic_word_counts: np.ndarray  # K x V int64
    topic_totals: np.ndarray  # K int64
    rng_seed: int = 0
    iterations: int = 0
    _phi: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def words(self) -> list[str]:
        out = [""] * len(self.vocab)
        for w, i in self.vocab.items():
            out[i] = w
        return out

    def phi(self) -> np.ndarray:
        """Topic-word probabilities, K x V, rows summing to one."""
        if self._phi is None:
            V = self.vocab_size
            self._phi = ((self.topic_word_counts + self.beta)
                         / (self.topic_totals[:, None] + V * self.beta))
        return self._phi

    def save(self, path: str | Path) -> None:
        save_model(self, path)


def _encode_docs(docs: Sequence[Sequence[str]], vocab: dict[str, int]):
    words, doc_ids = [], []
    for d, toks in enumerate(docs):
        for t in toks:
            j = vocab.get(t)
            if j is not None:
                words.append(j)
                doc_ids.append(d)
    return np.asarray(words, dtype=np.int64), np.asarray(doc_ids, dtype=np.int64)


def _as_token_lists(corpus) -> list[Sequence[str]]:
    if isinstance(corpus, ReferenceCorpus):
        return corpus.token_lists()
    return [h.tokens if hasattr(h, "tokens") else h for h in corpus]


def train(corpus, K: int, alpha: float | None = None, beta: float = DEFAULT_BETA,
          iterations: int = DEFAULT_SWEEPS, seed: int = 0,
          on_sweep: Callable[[int, np.ndarray, np.ndarray], None] | None = None) -> TopicModel:
    """Fit LDA with ``iterations`` full collapsed-Gibbs sweeps.

    ``corpus`` is a ReferenceCorpus or a sequence of token lists / Headlines.
    ``on_sweep(sweep, topic_word_counts, topic_totals)`` is called after the
    initial assignment (sweep 0) and after every sweep.
    """
    if K < 2:
        raise ValueError(f"need at least 2 topics, got {K}")
    if iterations < 1:
        raise ValueError("iterations must be positive")
    alpha = default_alpha(K) if alpha is None else float(alpha)
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    docs = [lda_tokens(t) for t in _as_token_lists(corpus)]
    vocab_words = sorted({t for d in docs for t in d})
    if not vocab_words:
        raise ValueError("corpus is empty after topic preprocessing")
    if K > len(vocab_words):
        raise ValueError(f"{K} topics exceed the retained vocabulary of {len(vocab_words)} words")
    vocab = {w: i for i, w in enumerate(vocab_words)}
    words, doc_ids = _encode_docs(docs, vocab)
    V, D, N = len(vocab), len(docs), words.shape[0]

    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.integers(0, K, size=N).astype(np.int64)
    nwk = np.zeros((V, K), dtype=np.int64)
    ndk = np.zeros((D, K), dtype=np.int64)
    np.add.at(nwk, (words, z), 1)
    np.add.at(ndk, (doc_ids, z), 1)
    nk = np.bincount(z, minlength=K).astype(np.int64)
    if on_sweep is not None:
        on_sweep(0, nwk.T, nk)
    for sweep in range(1, iterations + 1):
        u = rng.random(N)
        _kernels.train_sweep(words, doc_ids, z, nwk, ndk, nk, alpha, beta, u)
        if on_sweep is not None:
            on_sweep(sweep, nwk.T, nk)
    return TopicModel(num_topics=K, alpha=alpha, beta=float(beta), vocab=vocab,
                      topic_word_counts=np.ascontiguousarray(nwk.T), topic_totals=nk,
                      rng_seed=seed, iterations=iterations)


def infer_many(model: TopicModel, docs: Sequence[Sequence[str]],
               fold_in_iterations: int = DEFAULT_FOLD_IN, seed: int = 0) -> np.ndarray:
    """Fold-in topic mixtures for many token lists, one row per document.

    Rows are averaged over the final quarter of sweeps. Documents with no
    in-vocabulary token get the uniform distribution.
    """
    if fold_in_iterations < 1:
        raise ValueError("fold_in_iterations must be positive")
    K = model.num_topics
    alpha = model.alpha
    phi_wk = np.ascontiguousarray(model.phi().T)
    keep = max(1, fold_in_iterations // 4)
    out = np.full((len(docs), K), 1.0 / K)
    rng = np.random.Generator(np.random.PCG64(seed))
    for start in range(0, len(docs), _CHUNK_DOCS):
        chunk = docs[start:start + _CHUNK_DOCS]
        words, doc_ids = _encode_docs(chunk, model.vocab)
        if words.shape[0] == 0:
            continue
        n_d = np.bincount(doc_ids, minlength=len(chunk))
        z = rng.integers(0, K, size=words.shape[0]).astype(np.int64)
        ndk = np.zeros((len(chunk), K), dtype=np.int64)
        np.add.at(ndk, (doc_ids, z), 1)
        acc = np.zeros((len(chunk), K))
        denom = (n_d + K * alpha)[:, None]
        for sweep in range(fold_in_iterations):
            u = rng.random(words.shape[0])
            _kernels.foldin_sweep(words, doc_ids, z, phi_wk, ndk, alpha, u)
            if sweep >= fold_in_iterations - keep:
                acc += (ndk + alpha) / denom
        seen = n_d > 0
        out[start:start + len(chunk)][seen] = acc[seen] / keep
    return out


def infer(model: TopicModel, tokens: Sequence[str], fold_in_iterations: int = DEFAULT_FOLD_IN,
          seed: int = 0) -> np.ndarray:
    return infer_many(model, [tokens], fold_in_iterations, seed)[0]


def top_words(model: TopicModel, k: int, n: int) -> list[str]:
    if not 0 <= k < model.num_topics:
        raise IndexError(f"topic {k} out of range [0, {model.num_topics})")
    row = model.phi()[k]
    words = model.words
    order = sorted(range(len(words)), key=lambda j: (-row[j], words[j]))
    return [words[j] for j in order[:n]]


def coherence(model: TopicModel, corpus, top_n: int = 10, per_topic: bool = False):
    """Mean UMass coherence of the topics against document co-occurrence in ``corpus``.

    For top words ranked w_1..w_n the topic score is
    sum_{i>j} log((D(w_i, w_j) + 1) / D(w_j)). Pairs whose conditioning word
    never occurs in ``corpus`` are skipped.
    """
    if top_n < 2:
        raise ValueError("top_n must be at least 2")
    doc_sets = [set(lda_tokens(t)) for t in _as_token_lists(corpus)]
    tops = [top_words(model, k, top_n) for k in range(model.num_topics)]
    needed = {w for ws in tops for w in ws}
    index: dict[str, set[int]] = {w: set() for w in needed}
    for d, s in enumerate(doc_sets):
        for w in s & needed:
            index[w].add(d)
    scores = []
    for ws in tops:
        score = 0.0
        for i in range(1, len(ws)):
            for j in range(i):
                dj = len(index[ws[j]])
                if dj == 0:
                    continue
                co = len(index[ws[i]] & index[ws[j]])
                score += math.log((co + 1) / dj)
        scores.append(score)
    return scores if per_topic else float(np.mean(scores))


def select_num_topics(corpus, candidates: Sequence[int], top_n: int = 10,
                      **train_kwargs) -> tuple[int, list[tuple[int, float]]]:
    """Train one model per candidate and return the best-coherence K.

    Scores within a relative 1e-9 of the best count as ties and go to the smaller K.
    """
    if not candidates:
        raise ValueError("no candidate topic counts")
    table = []
    for K in candidates:
        model = train(corpus, K, **train_kwargs)
        table.append((K, coherence(model, corpus, top_n)))
    top = max(score for _, score in table)
    tol = 1e-9 * max(1.0, abs(top))
    best = min(K for K, score in table if score >= top - tol)
    return best, table


def save_model(model: TopicModel, path: str | Path) -> None:
    """Write the binary model plus a ``.json`` hyperparameter sidecar."""
    path = Path(path)
    K, V = model.num_topics, model.vocab_size
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qqddqq", K, V, model.alpha, model.beta,
                             model.rng_seed, model.iterations))
        for w in model.words:
            b = w.encode("utf-8")
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)
        fh.write(np.ascontiguousarray(model.topic_word_counts, dtype="<i8").tobytes())
        fh.write(np.ascontiguousarray(model.topic_totals, dtype="<i8").tobytes())
    sidecar = {"format": MAGIC.decode(), "num_topics": K, "vocab_size": V,
               "alpha": model.alpha, "beta": model.beta, "seed": model.rng_seed,
               "iterations": model.iterations}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> TopicModel:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a {MAGIC.decode()} topic model (magic {data[:8]!r})")
    off = 8
    K, V, alpha, beta, seed, iterations = struct.unpack_from("<qqddqq", data, off)
    off += struct.calcsize("<qqddqq")
    vocab = {}
    for i in range(V):
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        vocab[data[off:off + n].decode("utf-8")] = i
        off += n
    counts = np.frombuffer(data, dtype="<i8", count=K * V, offset=off).reshape(K, V)
    off += 8 * K * V
    totals = np.frombuffer(data, dtype="<i8", count=K, offset=off)
    if off + 8 * K != len(data):
        raise ValueError(f"{path}: trailing or missing bytes")
    return TopicModel(num_topics=K, alpha=alpha, beta=beta, vocab=vocab,
                      topic_word_counts=counts.astype(np.int64), topic_totals=totals.astype(np.int64),
                      rng_seed=seed, iterations=iterations)

"""Information distances between a headline's topics and reader exposure."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topicmodel import DEFAULT_FOLD_IN, TopicModel, infer_many

SMOOTHING = 1e-12
_SUM_TOL = 1e-6


def _check_pair(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0) or abs(math.fsum(v) - 1.0) > _SUM_TOL:
            raise ValueError(f"{name} is not a probability vector")
    return p, q


def kl_divergence(p, q) -> float:
    """D_KL(p || q) in nats, with 0 * log(0 / q) taken as 0."""
    p, q = _check_pair(p, q)
    support = p > 0
    if np.any(q[support] == 0):
        raise ValueError("q has zero mass where p is positive; smooth q first")
    terms = p[support] * np.log(p[support] / q[support])
    # clamp the rounding residue of identical inputs
    return max(0.0, math.fsum(terms))


def hellinger(p, q) -> float:
    p, q = _check_pair(p, q)
    diff = np.sqrt(p) - np.sqrt(q)
    return min(1.0, math.sqrt(math.fsum(diff * diff)) / math.sqrt(2.0))


def smooth(p, eps: float = SMOOTHING) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64) + eps
    return p / p.sum()


@dataclass(frozen=True)
class ExposureDistribution:
    probs: np.ndarray
    source_size: int

    def to_json(self) -> dict:
        return {"probs": [float(x) for x in self.probs], "source_size": self.source_size}

    @classmethod
    def from_json(cls, obj: dict) -> "ExposureDistribution":
        return cls(np.asarray(obj["probs"], dtype=np.float64), int(obj["source_size"]))


def exposure_from_distributions(dists) -> ExposureDistribution:
    dists = np.asarray(dists, dtype=np.float64)
    if dists.ndim != 2 or dists.shape[0] == 0:
        raise ValueError("exposure needs at least one distribution")
    return ExposureDistribution(smooth(dists.mean(axis=0)), dists.shape[0])


def exposure(model: TopicModel, corpus, seed: int = 0,
             fold_in_iterations: int = DEFAULT_FOLD_IN) -> ExposureDistribution:
    """Mean inferred topic mixture over the reference corpus, smoothed."""
    docs = corpus.token_lists() if hasattr(corpus, "token_lists") else list(corpus)
    if not docs:
        raise ValueError("exposure corpus is empty")
    return exposure_from_distributions(infer_many(model, docs, fold_in_iterations, seed))


def novelty_features(headline_dist, exposure: ExposureDistribution) -> tuple[float, float]:
    """(KL(headline || exposure), Hellinger) after identical smoothing of the headline."""
    h = np.asarray(headline_dist, dtype=np.float64)
    if h.shape != exposure.probs.shape:
        raise ValueError(f"topic count mismatch: {h.shape[0]} vs {exposure.probs.shape[0]}")
    h = smooth(h)
    return kl_divergence(h, exposure.probs), hellinger(h, exposure.probs)

"""Bigram surprise: how often a headline's word pairs occur in the reference corpus."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import bigrams

TABLE_HEADER = "# curio-bigrams v1"
TABLE_VERSION = 1


@dataclass(frozen=True)
class BigramTable:
    counts: Mapping[tuple[str, str], int]
    total_bigrams: int

    def __getitem__(self, pair: tuple[str, str]) -> int:
        return self.counts.get(pair, 0)

    def max_count(self) -> int:
        return max(self.counts.values(), default=0)

    def save(self, path: str | Path) -> None:
        lines = [TABLE_HEADER]
        lines += [f"{a}\t{b}\t{n}" for (a, b), n in sorted(self.counts.items())]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BigramTable":
        counts = {}
        with Path(path).open(encoding="utf-8") as fh:
            first = fh.readline().rstrip("\n")
            if first != TABLE_HEADER:
                raise ValueError(f"{path}: bigram table version header {first!r} != {TABLE_HEADER!r}")
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected token1<TAB>token2<TAB>count")
                counts[(parts[0], parts[1])] = int(parts[2])
        return cls(counts, sum(counts.values()))


def build_table(corpus) -> BigramTable:
    docs = corpus.token_lists() if hasattr(corpus, "token_lists") else list(corpus)
    if not docs:
        raise ValueError("cannot build a bigram table from an empty corpus")
    counts: Counter = Counter()
    for toks in docs:
        counts.update(bigrams(toks))
    return BigramTable(dict(counts), sum(counts.values()))


def surprise_vector(table: BigramTable, tokens: Sequence[str]) -> list[int]:
    return [table[bg] for bg in bigrams(tokens)]


def zero_run(vec: Sequence[int]) -> int:
    best = run = 0
    for v in vec:
        run = run + 1 if v == 0 else 0
        best = max(best, run)
    return best


def max_nonzero(vec: Sequence[int]) -> int:
    # all-zero or empty vectors have no non-zero maximum; 0 is the sentinel
    return max(vec, default=0)


def surprise_features(table: BigramTable, tokens: Sequence[str]) -> tuple[int, int]:
    vec = surprise_vector(table, tokens)
    return zero_run(vec), max_nonzero(vec)

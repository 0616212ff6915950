"""Information-gap stylistic cues: questions, semantic-role proxies, lexicons,
self reference, saliency and listicle numerals.

Semantic roles are approximated by lexical span rules; every cue list lives in
a JSON rule file (``data/rules.json`` by default) so the heuristics are auditable.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from .corpus import Headline, Lexicon, LexiconKind, load_lexicon

_YEAR = re.compile(r"(19|20)\d\d")
_DAY_MONTH = re.compile(r"\d{1,2}[/.\-]\d{1,2}([/.\-]\d{2,4})?")
_EDGE_PUNCT = "\"'()[]{},.;:!?“”‘’"


def _data_path(name: str) -> Path:
    return Path(str(resources.files("curio") / "data" / name))


@dataclass(frozen=True)
class RuleConfig:
    question_cues: frozenset[str]
    modals: frozenset[str]
    temporal_cues: frozenset[str]
    temporal_expanders: frozenset[str]
    purpose_cues: frozenset[str]
    self_pronouns: frozenset[str]
    continuous_aux: frozenset[str]
    perfect_aux: frozenset[str]
    irregular_participles: frozenset[str]
    number_words: frozenset[str]
    tense_window: int = 2
    min_ing_length: int = 5
    version: int = 1

    @classmethod
    def load(cls, path: str | Path | None = None) -> "RuleConfig":
        raw = json.loads(Path(path or _data_path("rules.json")).read_text(encoding="utf-8"))
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in raw:
                if f.default is dataclasses.MISSING:
                    raise ValueError(f"rule file lacks {f.name!r}")
                continue
            v = raw[f.name]
            kwargs[f.name] = frozenset(w.lower() for w in v) if isinstance(v, list) else v
        return cls(**kwargs)


@dataclass(frozen=True)
class LexiconSet:
    uncertainty: Lexicon
    anticipation: Lexicon
    self_concept: tuple[Lexicon, ...] = ()

    @classmethod
    def fallback(cls) -> "LexiconSet":
        return cls(
            uncertainty=load_lexicon(_data_path("uncertainty.txt"), LexiconKind.uncertainty),
            anticipation=load_lexicon(_data_path("anticipation.txt"), LexiconKind.anticipation),
            self_concept=(load_lexicon(_data_path("self_concept.txt"), LexiconKind.self_concept),),
        )


@dataclass(frozen=True)
class InfoGapFeatures:
    is_interrogative: int = 0
    question_word_count: int = 0
    modal_count: int = 0
    temporal_span_len: int = 0
    purpose_span_len: int = 0
    uncertainty_count: int = 0
    anticipation_count: int = 0
    self_pronoun_count: int = 0
    self_lexicon_hits: int = 0
    saliency_count: int = 0
    continuous_tense: int = 0
    perfect_tense: int = 0
    starts_with_number: int = 0
    contains_number: int = 0

    def values(self) -> tuple[int, ...]:
        return dataclasses.astuple(self)


FIELDS = tuple(f.name for f in dataclasses.fields(InfoGapFeatures))

_DEFAULT_RULES: RuleConfig | None = None


def default_rules() -> RuleConfig:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = RuleConfig.load()
    return _DEFAULT_RULES


def interrogative(tokens: Sequence[str], raw_text: str,
                  rules: RuleConfig | None = None) -> tuple[int, int]:
    rules = rules or default_rules()
    count = sum(t in rules.question_cues for t in tokens)
    asks = raw_text.rstrip().endswith("?") or (bool(tokens) and tokens[0] in rules.question_cues)
    return int(asks), count


def _temporal_span_len(tokens, rules: RuleConfig) -> int:
    covered = [False] * len(tokens)
    for i, t in enumerate(tokens):
        if t not in rules.temporal_cues:
            continue
        lo = i
        while lo > 0 and tokens[lo - 1] in rules.temporal_expanders:
            lo -= 1
        hi = i
        while hi + 1 < len(tokens) and tokens[hi + 1] in rules.temporal_expanders:
            hi += 1
        for j in range(lo, hi + 1):
            covered[j] = True
    return sum(covered)


def _purpose_span_len(tokens, rules: RuleConfig) -> int:
    for i, t in enumerate(tokens[:-1]):
        if t in rules.purpose_cues:
            return len(tokens) - i
    return 0


def srl_proxies(tokens: Sequence[str], rules: RuleConfig | None = None) -> tuple[int, int, int]:
    """(modal count, temporal span length, purpose span length)."""
    rules = rules or default_rules()
    modal = sum(t in rules.modals for t in tokens)
    return modal, _temporal_span_len(tokens, rules), _purpose_span_len(tokens, rules)


def lexicon_counts(tokens: Sequence[str], uncertainty: Lexicon,
                   anticipation: Lexicon) -> tuple[int, int]:
    return sum(t in uncertainty for t in tokens), sum(t in anticipation for t in tokens)


def self_features(tokens: Sequence[str], self_lexicons: Sequence[Lexicon] = (),
                  rules: RuleConfig | None = None) -> tuple[int, int]:
    # a token in several self-concept lexicons counts once
    rules = rules or default_rules()
    pronouns = sum(t in rules.self_pronouns for t in tokens)
    hits = sum(any(t in lex for lex in self_lexicons) for t in tokens)
    return pronouns, hits


def _date_patterns(raw_text: str) -> int:
    n = 0
    for piece in raw_text.split():
        piece = piece.strip(_EDGE_PUNCT)
        if _YEAR.fullmatch(piece) or _DAY_MONTH.fullmatch(piece):
            n += 1
    return n


def _followed_within(tokens, aux, window, pred) -> bool:
    for i, t in enumerate(tokens):
        if t in aux and any(pred(x) for x in tokens[i + 1:i + 1 + window]):
            return True
    return False


def saliency_features(tokens: Sequence[str], raw_text: str,
                      rules: RuleConfig | None = None) -> tuple[int, int, int]:
    """(temporal cues + date patterns, continuous-tense flag, perfect-tense flag)."""
    rules = rules or default_rules()
    count = sum(t in rules.temporal_cues for t in tokens) + _date_patterns(raw_text)
    continuous = _followed_within(
        tokens, rules.continuous_aux, rules.tense_window,
        lambda x: x.endswith("ing") and len(x) >= rules.min_ing_length)
    perfect = _followed_within(
        tokens, rules.perfect_aux, rules.tense_window,
        lambda x: (x.endswith("ed") and len(x) > 3) or x in rules.irregular_participles)
    return count, int(continuous), int(perfect)


def _is_number(tok: str, rules: RuleConfig) -> bool:
    return tok.isdigit() or tok in rules.number_words


def listicle_features(tokens: Sequence[str], rules: RuleConfig | None = None) -> tuple[int, int]:
    rules = rules or default_rules()
    starts = bool(tokens) and _is_number(tokens[0], rules)
    return int(starts), int(any(_is_number(t, rules) for t in tokens))


def extract(headline: Headline | str, lexicons: LexiconSet,
            rules: RuleConfig | None = None) -> InfoGapFeatures:
    if isinstance(headline, str):
        headline = Headline.from_text(0, headline)
    rules = rules or default_rules()
    toks, raw = headline.tokens, headline.text
    is_q, n_q = interrogative(toks, raw, rules)
    modal, tmp, pnc = srl_proxies(toks, rules)
    unc, ant = lexicon_counts(toks, lexicons.uncertainty, lexicons.anticipation)
    pron, selfhits = self_features(toks, lexicons.self_concept, rules)
    sal, cont, perf = saliency_features(toks, raw, rules)
    starts, contains = listicle_features(toks, rules)
    return InfoGapFeatures(is_q, n_q, modal, tmp, pnc, unc, ant, pron, selfhits,
                           sal, cont, perf, starts, contains)

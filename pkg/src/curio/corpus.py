"""Headline datasets, reference corpora, lexicons and the shared tokenizer."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

_APOSTROPHES = re.compile(r"['’‘`]")
_NON_WORD = re.compile(r"[^\w\s]|_")


def tokenize(text: str) -> list[str]:
    """Lowercase, drop punctuation, split on whitespace.

    Apostrophes are deleted so contractions stay one token ("won't" -> "wont");
    every other punctuation character becomes a separator. Numerals are kept.
    """
    text = _APOSTROPHES.sub("", text.lower())
    return _NON_WORD.sub(" ", text).split()


def bigrams(tokens: Sequence[str]) -> list[tuple[str, str]]:
    return list(zip(tokens, tokens[1:]))


@dataclass(frozen=True)
class Headline:
    id: int
    text: str
    label: int | None = None
    tokens: tuple[str, ...] = field(default=())
    date: dt.date | None = None

    @classmethod
    def from_text(cls, id: int, text: str, label: int | None = None,
                  date: dt.date | None = None) -> "Headline":
        if label is not None and label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label!r}")
        return cls(id=id, text=text, label=label, tokens=tuple(tokenize(text)), date=date)


@dataclass(frozen=True)
class ReferenceCorpus:
    headlines: tuple[Headline, ...]
    source_name: str = ""
    date_range: tuple[dt.date, dt.date] | None = None
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.headlines)

    def token_lists(self) -> list[tuple[str, ...]]:
        return [h.tokens for h in self.headlines]


class LexiconKind(str, enum.Enum):
    uncertainty = "uncertainty"
    anticipation = "anticipation"
    self_concept = "self_concept"
    modal = "modal"
    temporal_cue = "temporal_cue"
    purpose_cue = "purpose_cue"
    question_cue = "question_cue"


@dataclass(frozen=True)
class Lexicon:
    name: str
    words: frozenset[str]
    kind: LexiconKind

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_words(cls, name: str, words: Iterable[str], kind: LexiconKind | str) -> "Lexicon":
        normalized = _normalize_entries(words, name)
        if not normalized:
            raise ValueError(f"lexicon {name!r} is empty")
        return cls(name=name, words=frozenset(normalized), kind=LexiconKind(kind))


class DataError(ValueError):
    """Raised for malformed dataset rows; carries the 1-based line number."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _normalize_entries(words: Iterable[str], name: str) -> set[str]:
    out = set()
    for raw in words:
        toks = tokenize(raw)
        if len(toks) == 1:
            out.add(toks[0])
        elif toks:
            # multi-token entries can never match a single headline token
            logger.debug("lexicon %s: dropping multi-token entry %r", name, raw)
    return out


def _parse_label(value, path, line: int) -> int | None:
    if value is None or (isinstance(value, str) and value.strip() == ""):
        return None
    try:
        label = int(str(value).strip())
    except ValueError:
        raise DataError(path, line, f"label {value!r} is not an integer") from None
    if label not in (0, 1):
        raise DataError(path, line, f"label {label} not in {{0, 1}}")
    return label


def load_headlines(path: str | Path, format: str = "csv", label: int | None = None) -> list[Headline]:
    """Read a labeled headline file.

    ``format`` is ``csv`` (header with ``text`` and optional ``label``),
    ``jsonl`` (one object per line) or ``txt`` (one headline per non-blank
    line, the layout of the public clickbait distribution). A non-None
    ``label`` is assigned to every record and overrides any label column.
    Ids run from 0 in file order; duplicates are kept.
    """
    path = Path(path)
    if label is not None and label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    records: list[tuple[str, int | None]] = []
    if format == "csv":
        with path.open(encoding="utf-8-sig", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                return []
            header = [h.strip().lower() for h in header]
            if "text" not in header:
                raise DataError(path, 1, "header has no 'text' column")
            ti = header.index("text")
            li = header.index("label") if "label" in header else None
            for row in reader:
                line = reader.line_num
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(path, line, f"expected {len(header)} fields, got {len(row)}")
                lab = label if label is not None else (
                    _parse_label(row[li], path, line) if li is not None else None)
                records.append((row[ti], lab))
    elif format == "jsonl":
        with path.open(encoding="utf-8-sig") as fh:
            for line, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise DataError(path, line, f"invalid JSON ({exc.msg})") from None
                if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                    raise DataError(path, line, "missing 'text' field")
                lab = label if label is not None else _parse_label(obj.get("label"), path, line)
                records.append((obj["text"], lab))
    elif format == "txt":
        with path.open(encoding="utf-8-sig") as fh:
            for raw in fh:
                if raw.strip():
                    records.append((raw.strip(), label))
    else:
        raise ValueError(f"unknown headline format {format!r}")
    return [Headline.from_text(i, text, lab) for i, (text, lab) in enumerate(records)]


def parse_date(value: str | dt.date) -> dt.date:
    if isinstance(value, dt.date):
        return value
    value = value.strip()
    if re.fullmatch(r"\d{8}", value):
        return dt.datetime.strptime(value, "%Y%m%d").date()
    return dt.date.fromisoformat(value)


def load_reference(path: str | Path, start: str | dt.date | None = None,
                   end: str | dt.date | None = None) -> ReferenceCorpus:
    """Read an ABC-style ``publish_date,headline_text`` CSV, keeping rows in [start, end].

    Rows whose date does not parse are skipped and tallied in ``skipped``.
    Either bound may be None for an open window.
    """
    path = Path(path)
    lo = parse_date(start) if start is not None else None
    hi = parse_date(end) if end is not None else None
    if lo is not None and hi is not None and lo > hi:
        raise ValueError(f"window start {lo} is after end {hi}")
    kept: list[Headline] = []
    skipped = 0
    with path.open(encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None:
            header = [h.strip().lower() for h in header]
            if "publish_date" not in header or "headline_text" not in header:
                raise DataError(path, 1, "expected columns publish_date, headline_text")
            di, hi_ = header.index("publish_date"), header.index("headline_text")
            for row in reader:
                if not row:
                    continue
                try:
                    date = dt.datetime.strptime(row[di].strip(), "%Y%m%d").date()
                    text = row[hi_]
                except (ValueError, IndexError):
                    skipped += 1
                    continue
                if (lo is not None and date < lo) or (hi is not None and date > hi):
                    continue
                kept.append(Headline.from_text(len(kept), text, None, date=date))
    if skipped:
        logger.warning("%s: skipped %d rows with unparseable dates", path, skipped)
    window = (lo, hi) if lo is not None and hi is not None else None
    return ReferenceCorpus(tuple(kept), source_name=path.name, date_range=window, skipped=skipped)


def reference_from_texts(texts: Iterable[str], source_name: str = "memory") -> ReferenceCorpus:
    return ReferenceCorpus(tuple(Headline.from_text(i, t) for i, t in enumerate(texts)),
                           source_name=source_name)


def load_lexicon(path: str | Path, kind: LexiconKind | str, name: str | None = None) -> Lexicon:
    """Load a one-entry-per-line lexicon; ``#`` starts a comment.

    NRC EmoLex rows (``word<TAB>emotion<TAB>flag``) are accepted for the
    anticipation kind: only rows with emotion ``anticipation`` and flag 1 are kept.
    """
    path = Path(path)
    kind = LexiconKind(kind)
    words = []
    with path.open(encoding="utf-8-sig") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) == 3:
                if kind is not LexiconKind.anticipation:
                    raise ValueError(f"{path}: NRC triple format only supported for anticipation")
                word, emotion, flag = (p.strip() for p in parts)
                if emotion.lower() == "anticipation" and flag == "1":
                    words.append(word)
            else:
                words.append(line)
    return Lexicon.from_words(name or path.stem, words, kind)

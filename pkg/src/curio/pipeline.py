"""End-to-end runs: fit resources, featurize, split, train, evaluate, persist.

Every stage writes its artifacts into the run directory and records a stage
key (a hash of its configuration and upstream artifact digests) in
``stages.json``. A later run with the same configuration reuses a stage whose
key matches and whose files are intact, so deleting a downstream artifact
re-executes only that stage and the ones after it.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, _kernels, classifier, infogap, topicmodel
from .classifier import SCHEMAS, EvalReport, LinearModel, Resources
from .corpus import (Headline, LexiconKind, ReferenceCorpus, load_headlines, load_lexicon,
                     load_reference, parse_date, tokenize)
from .novelty import ExposureDistribution, exposure, novelty_features
from .surprise import BigramTable, build_table, surprise_features, surprise_vector

logger = logging.getLogger(__name__)

SEED_OFFSETS = {"topics": 101, "infer": 202, "split": 303, "model": 404}
STAGES = ("prep", "topics", "exposure", "bigrams", "features", "split", "train", "eval")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class RunConfig:
    datasets: list[dict] = field(default_factory=list)
    reference: dict = field(default_factory=lambda: {
        "path": None, "topic_window": ["2014-09-01", "2015-09-30"], "surprise_window": None})
    lexicons: dict = field(default_factory=lambda: {
        "uncertainty": None, "anticipation": None, "self_concept": None})
    rules: str | None = None
    topics: dict = field(default_factory=lambda: {
        "num_topics": 200, "alpha": None, "beta": topicmodel.DEFAULT_BETA,
        "iterations": topicmodel.DEFAULT_SWEEPS, "fold_in_iterations": topicmodel.DEFAULT_FOLD_IN})
    feature_set: str = "all"
    model: dict = field(default_factory=lambda: {"kind": "logreg", "params": {}})
    train_fraction: float = 0.2
    seed: int = 0
    output_dir: str = "out"
    base_dir: str = field(default=".", compare=False)

    @classmethod
    def from_dict(cls, obj: dict, base_dir: str | Path = ".") -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(base_dir=str(base_dir))
        for key, value in obj.items():
            default = getattr(cfg, key)
            if isinstance(default, dict) and isinstance(value, dict):
                value = {**default, **value}
            setattr(cfg, key, value)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def stage_seed(self, stage: str) -> int:
        return int(self.seed) + SEED_OFFSETS[stage]

    def validate(self) -> None:
        if self.feature_set not in SCHEMAS:
            raise ValueError(f"feature_set must be one of {sorted(SCHEMAS)}")
        if self.model.get("kind") not in ("logreg", "svm"):
            raise ValueError("model.kind must be 'logreg' or 'svm'")
        if not 0 < float(self.train_fraction) < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        for ds in self.datasets:
            if "path" not in ds:
                raise ValueError("every dataset entry needs a 'path'")

    def needs(self) -> set[str]:
        fs = self.feature_set
        out = set()
        if fs in ("novelty", "all"):
            out |= {"topics", "exposure"}
        if fs in ("surprise", "all"):
            out.add("bigrams")
        return out

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        p = Path(os.path.expanduser(p))
        return p if p.is_absolute() else Path(self.base_dir) / p

    def resolve_lexicon(self, p: str) -> Path:
        root = os.environ.get("CURIO_LEXICON_DIR")
        path = Path(os.path.expanduser(p))
        if path.is_absolute():
            return path
        return Path(root) / path if root else Path(self.base_dir) / path

    def out_dir(self) -> Path:
        return self.resolve(self.output_dir)


@dataclass
class RunManifest:
    config_hash: str
    status: str
    artifacts: list[dict]
    counts: dict
    timings: dict
    stages: dict
    seed: int
    backend: str
    failed_stage: str | None = None
    error: str | None = None

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def digests(self) -> dict[str, str]:
        return {a["name"]: a["sha256"] for a in self.artifacts}


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _key(*parts: Any) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True, default=str).encode()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def load_lexicon_set(cfg: RunConfig) -> infogap.LexiconSet:
    fallback = infogap.LexiconSet.fallback()
    lx = cfg.lexicons
    unc = (load_lexicon(cfg.resolve_lexicon(lx["uncertainty"]), LexiconKind.uncertainty)
           if lx.get("uncertainty") else fallback.uncertainty)
    ant = (load_lexicon(cfg.resolve_lexicon(lx["anticipation"]), LexiconKind.anticipation)
           if lx.get("anticipation") else fallback.anticipation)
    if lx.get("self_concept") is None:
        selfs = fallback.self_concept
    else:
        selfs = tuple(load_lexicon(cfg.resolve_lexicon(p), LexiconKind.self_concept)
                      for p in lx["self_concept"])
    return infogap.LexiconSet(unc, ant, selfs)


def load_rules(cfg: RunConfig) -> infogap.RuleConfig:
    return infogap.RuleConfig.load(cfg.resolve(cfg.rules)) if cfg.rules else infogap.default_rules()


def load_dataset(cfg: RunConfig) -> list[Headline]:
    out: list[Headline] = []
    for ds in cfg.datasets:
        for h in load_headlines(cfg.resolve(ds["path"]), ds.get("format", "csv"), ds.get("label")):
            out.append(dataclasses.replace(h, id=len(out)))
    return out


def _window(corpus: ReferenceCorpus, window) -> ReferenceCorpus:
    if not window:
        return corpus
    lo, hi = parse_date(window[0]), parse_date(window[1])
    if lo > hi:
        raise ValueError(f"window start {lo} is after end {hi}")
    kept = tuple(h for h in corpus.headlines if h.date is not None and lo <= h.date <= hi)
    return ReferenceCorpus(kept, corpus.source_name, (lo, hi), corpus.skipped)


class _Run:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = cfg.out_dir()
        self.out.mkdir(parents=True, exist_ok=True)
        self.stages_path = self.out / "stages.json"
        self.stage_log = json.loads(self.stages_path.read_text()) if self.stages_path.exists() else {}
        self.status: dict[str, str] = {}
        self.timings: dict[str, float] = {}
        self.counts: dict[str, Any] = {}
        self.digests: dict[str, str] = {}
        self._reference: ReferenceCorpus | None = None
        self._dataset: list[Headline] | None = None

    # lazily loaded inputs, only touched by stages that actually execute
    @property
    def reference(self) -> ReferenceCorpus:
        if self._reference is None:
            path = self.cfg.resolve(self.cfg.reference.get("path"))
            if path is None:
                raise ValueError("config has no reference corpus path")
            self._reference = load_reference(path)
        return self._reference

    @property
    def dataset(self) -> list[Headline]:
        if self._dataset is None:
            self._dataset = load_dataset(self.cfg)
        return self._dataset

    def cached(self, stage: str, key: str, files: list[str]) -> bool:
        entry = self.stage_log.get(stage)
        if not entry or entry.get("key") != key:
            return False
        for name in files:
            p = self.out / name
            if not p.exists() or sha256_file(p) != entry["artifacts"].get(name):
                return False
        return True

    def stage(self, name: str, key, files: list[str], execute) -> None:
        """Run ``execute`` unless a matching cached result exists; ``key`` may be a callable."""
        t0 = time.perf_counter()
        try:
            key = key() if callable(key) else key
            hit = self.cached(name, key, files)
            if not hit:
                execute()
        except Exception as exc:
            raise StageError(name, exc) from exc
        if hit:
            self.status[name] = "cached"
        else:
            self.status[name] = "executed"
            self.stage_log[name] = {"key": key, "artifacts": {
                f: sha256_file(self.out / f) for f in files}}
            self.stages_path.write_text(json.dumps(self.stage_log, indent=2, sort_keys=True) + "\n")
        for f in files:
            self.digests[f] = self.stage_log[name]["artifacts"][f]
        self.timings[name] = round(time.perf_counter() - t0, 6)


def _input_digest(paths) -> list[str]:
    return [sha256_file(p) for p in paths if p is not None]


def run(cfg: RunConfig, until: str = "eval") -> RunManifest:
    """Execute stages in order up to and including ``until`` and write the manifest."""
    if until not in STAGES:
        raise ValueError(f"unknown stage {until!r}")
    r = _Run(cfg)
    stop = STAGES.index(until)
    err: StageError | None = None
    try:
        _execute(r, stop)
    except StageError as exc:
        err = exc
    manifest = RunManifest(
        config_hash=cfg.config_hash(),
        status="complete" if err is None else "incomplete",
        artifacts=[{"name": n, "sha256": d} for n, d in sorted(r.digests.items())],
        counts=r.counts, timings=r.timings, stages=r.status, seed=int(cfg.seed),
        backend=_kernels.BACKEND,
        failed_stage=err.stage if err else None, error=str(err.cause) if err else None)
    _write_json(r.out / "manifest.json", manifest.to_json())
    if err is not None:
        raise err
    return manifest


def _execute(r: _Run, stop: int) -> None:
    cfg, out = r.cfg, r.out
    needs = cfg.needs()
    ds_paths = [cfg.resolve(d["path"]) for d in cfg.datasets]
    ref_path = cfg.resolve(cfg.reference.get("path"))
    lex_paths = [cfg.resolve_lexicon(p) for k in ("uncertainty", "anticipation")
                 if (p := cfg.lexicons.get(k))]
    lex_paths += [cfg.resolve_lexicon(p) for p in (cfg.lexicons.get("self_concept") or [])]

    def at(stage):
        return STAGES.index(stage) <= stop

    _write_json(out / "config.json", cfg.to_dict())

    # prep: inputs and their counts
    def prep_key():
        return _key("prep", __version__, _input_digest(ds_paths),
                    _input_digest([ref_path]), cfg.reference)

    def do_prep():
        counts = {"dataset": len(r.dataset),
                  "clickbait": sum(h.label == 1 for h in r.dataset),
                  "non_clickbait": sum(h.label == 0 for h in r.dataset)}
        if ref_path is not None:
            counts["reference"] = len(r.reference)
            counts["reference_skipped"] = r.reference.skipped
            counts["topic_window"] = len(_window(r.reference, cfg.reference.get("topic_window")))
            counts["surprise_window"] = len(_window(r.reference, cfg.reference.get("surprise_window")))
        _write_json(out / "prep.json", counts)

    r.stage("prep", prep_key, ["prep.json"], do_prep)
    r.counts.update(json.loads((out / "prep.json").read_text()))
    if not at("topics"):
        return

    tcfg = cfg.topics
    if "topics" in needs:
        key = _key("topics", r.digests["prep.json"], tcfg, cfg.reference.get("topic_window"),
                   cfg.stage_seed("topics"))

        def do_topics():
            corpus = _window(r.reference, cfg.reference.get("topic_window"))
            model = topicmodel.train(corpus, int(tcfg["num_topics"]), tcfg.get("alpha"),
                                     float(tcfg["beta"]), int(tcfg["iterations"]),
                                     cfg.stage_seed("topics"))
            model.save(out / "topic_model.bin")

        r.stage("topics", key, ["topic_model.bin", "topic_model.bin.json"], do_topics)
    if not at("exposure"):
        return

    if "exposure" in needs:
        key = _key("exposure", r.digests["topic_model.bin"], tcfg["fold_in_iterations"],
                   cfg.stage_seed("infer"))

        def do_exposure():
            model = topicmodel.load_model(out / "topic_model.bin")
            corpus = _window(r.reference, cfg.reference.get("topic_window"))
            exp = exposure(model, corpus, cfg.stage_seed("infer"), int(tcfg["fold_in_iterations"]))
            _write_json(out / "exposure.json", exp.to_json())

        r.stage("exposure", key, ["exposure.json"], do_exposure)
    if not at("bigrams"):
        return

    if "bigrams" in needs:
        key = _key("bigrams", r.digests["prep.json"], cfg.reference.get("surprise_window"))

        def do_bigrams():
            build_table(_window(r.reference, cfg.reference.get("surprise_window"))).save(
                out / "bigrams.tsv")

        r.stage("bigrams", key, ["bigrams.tsv"], do_bigrams)
    if not at("features"):
        return

    schema = SCHEMAS[cfg.feature_set]
    upstream = {n: r.digests[n] for n in ("prep.json", "exposure.json", "bigrams.tsv",
                                          "topic_model.bin") if n in r.digests}
    def key():
        rules_digest = _input_digest([cfg.resolve(cfg.rules)]) if cfg.rules else "default"
        return _key("features", upstream, cfg.feature_set, _input_digest(lex_paths), rules_digest,
                    tcfg["fold_in_iterations"], cfg.stage_seed("infer"))

    def do_features():
        res = load_resources(cfg, out)
        X = classifier.feature_matrix(r.dataset, cfg.feature_set, res)
        rows = [[h.id, h.label, *map(repr, map(float, x))] for h, x in zip(r.dataset, X)]
        _write_csv(out / "features.csv", ["headline_id", "label", *schema], rows)

    r.stage("features", key, ["features.csv"], do_features)
    if not at("split"):
        return

    key = _key("split", r.digests["prep.json"], cfg.train_fraction, cfg.stage_seed("split"))

    def do_split():
        train, test = classifier.split(r.dataset, float(cfg.train_fraction), cfg.stage_seed("split"))
        _write_json(out / "split.json", {"train": [h.id for h in train], "test": [h.id for h in test]})

    r.stage("split", key, ["split.json"], do_split)
    r.counts.update({k + "_size": len(v) for k, v in
                     json.loads((out / "split.json").read_text()).items()})
    if not at("train"):
        return

    key = _key("train", r.digests["features.csv"], r.digests["split.json"], cfg.model,
               cfg.stage_seed("model"))

    def do_train():
        ids, y, X = read_features(out / "features.csv")
        part = json.loads((out / "split.json").read_text())
        rows = _rows(ids, part["train"])
        model = classifier.train_model(cfg.model["kind"], X[rows], y[rows],
                                       seed=cfg.stage_seed("model"), schema=schema,
                                       **cfg.model.get("params", {}))
        model.training_meta["feature_set"] = cfg.feature_set
        model.save(out / "model.json")

    r.stage("train", key, ["model.json"], do_train)
    if not at("eval"):
        return

    key = _key("eval", r.digests["model.json"], r.digests["features.csv"], r.digests["split.json"])

    def do_eval():
        ids, y, X = read_features(out / "features.csv")
        part = json.loads((out / "split.json").read_text())
        rows = _rows(ids, part["test"])
        model = LinearModel.load(out / "model.json")
        rep = classifier.evaluate(model, X[rows], y[rows])
        _write_json(out / "report.json", {"kind": model.kind, "feature_set": cfg.feature_set,
                                          **rep.to_json()})
        (out / "report.txt").write_text(
            classifier.format_table([(model.kind, cfg.feature_set, rep)]) + "\n")
        test_ids = [ids[i] for i in rows]
        cols = {name: j for j, name in enumerate(schema)}
        if "kl" in cols:
            _write_csv(out / "novelty_hist.csv", ["headline_id", "class", "kl", "hellinger"],
                       [[i, int(y[k]), repr(float(X[k, cols["kl"]])), repr(float(X[k, cols["hellinger"]]))]
                        for i, k in zip(test_ids, rows)])
        if "zero_run" in cols:
            _write_csv(out / "surprise_hist.csv", ["headline_id", "class", "zero_run", "max_nonzero"],
                       [[i, int(y[k]), int(X[k, cols["zero_run"]]), int(X[k, cols["max_nonzero"]])]
                        for i, k in zip(test_ids, rows)])

    files = ["report.json", "report.txt"]
    if "kl" in schema:
        files.append("novelty_hist.csv")
    if "zero_run" in schema:
        files.append("surprise_hist.csv")
    r.stage("eval", key, files, do_eval)
    r.counts["n_test"] = json.loads((out / "report.json").read_text())["n_test"]


def _rows(ids: list[int], wanted: list[int]) -> np.ndarray:
    pos = {hid: k for k, hid in enumerate(ids)}
    return np.array([pos[i] for i in wanted], dtype=np.int64)


def read_features(path: Path) -> tuple[list[int], np.ndarray, np.ndarray]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        ids, labels, rows = [], [], []
        for row in reader:
            ids.append(int(row[0]))
            labels.append(int(row[1]))
            rows.append([float(v) for v in row[2:]])
    return ids, np.asarray(labels, dtype=np.float64), np.asarray(rows, dtype=np.float64)


def load_resources(cfg: RunConfig, out: Path) -> Resources:
    out = Path(out)
    res = Resources(lexicons=load_lexicon_set(cfg), rules=load_rules(cfg),
                    fold_in_iterations=int(cfg.topics["fold_in_iterations"]),
                    infer_seed=cfg.stage_seed("infer"))
    if (out / "topic_model.bin").exists():
        res.topic_model = topicmodel.load_model(out / "topic_model.bin")
    if (out / "exposure.json").exists():
        res.exposure = ExposureDistribution.from_json(json.loads((out / "exposure.json").read_text()))
    if (out / "bigrams.tsv").exists():
        res.bigram_table = BigramTable.load(out / "bigrams.tsv")
    return res


def score(run_dir: str | Path, text: str) -> dict:
    """Curiosity profile of one headline under a finished run's artifacts."""
    run_dir = Path(run_dir)
    model_obj = json.loads((run_dir / "model.json").read_text())
    model = LinearModel.from_json(model_obj)
    versions = model_obj.get("artifact_versions", {})
    if versions.get("topic_model") != topicmodel.MAGIC.decode():
        raise ValueError(f"model expects topic model format {versions.get('topic_model')!r}, "
                         f"this build reads {topicmodel.MAGIC.decode()!r}")
    if versions.get("bigram_table") != classifier.TABLE_VERSION:
        raise ValueError(f"model expects bigram table v{versions.get('bigram_table')}, "
                         f"this build reads v{classifier.TABLE_VERSION}")
    cfg = RunConfig.from_dict(json.loads((run_dir / "config.json").read_text()), base_dir=run_dir)
    res = load_resources(cfg, run_dir)
    h = Headline.from_text(0, text)
    profile: dict[str, Any] = {"text": text, "tokens": list(h.tokens),
                               "novelty": None, "surprise": None}
    if res.topic_model is not None and res.exposure is not None:
        dist = topicmodel.infer(res.topic_model, h.tokens, res.fold_in_iterations, res.infer_seed)
        kl, hel = novelty_features(dist, res.exposure)
        profile["novelty"] = {"kl": kl, "hellinger": hel}
    if res.bigram_table is not None:
        zr, mx = surprise_features(res.bigram_table, h.tokens)
        profile["surprise"] = {"zero_run": zr, "max_nonzero": mx,
                               "vector": surprise_vector(res.bigram_table, h.tokens)}
    profile["infogap"] = dataclasses.asdict(infogap.extract(h, res.lexicons, res.rules))
    fset = model.training_meta.get("feature_set", cfg.feature_set)
    if tuple(model.schema) != SCHEMAS[fset]:
        raise ValueError("model schema does not match its feature set")
    x = classifier.feature_matrix([h], fset, res)[0]
    s, p, lab = classifier.predict(model, x)
    profile["model"] = {"kind": model.kind, "feature_set": fset, "score": s, "prob": p, "label": lab}
    return profile


def evaluate_grid(run_dir: str | Path, cfg: RunConfig,
                  kinds=("svm", "logreg"), feature_sets=("novelty", "surprise", "all")):
    """Train and score every (kind, feature set) pair on one 'all' feature matrix."""
    run_dir = Path(run_dir)
    ids, y, X = read_features(run_dir / "features.csv")
    part = json.loads((run_dir / "split.json").read_text())
    tr, te = _rows(ids, part["train"]), _rows(ids, part["test"])
    full = SCHEMAS[cfg.feature_set]
    rows = []
    for kind in kinds:
        for fs in feature_sets:
            cols = [full.index(c) for c in SCHEMAS[fs]]
            params = cfg.model.get("params", {}) if kind == cfg.model["kind"] else {}
            m = classifier.train_model(kind, X[tr][:, cols], y[tr], seed=cfg.stage_seed("model"),
                                       schema=SCHEMAS[fs], **params)
            rows.append((kind, fs, classifier.evaluate(m, X[te][:, cols], y[te])))
    return rows

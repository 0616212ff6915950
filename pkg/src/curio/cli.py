"""``curio`` command line.

Exit codes: 0 success, 1 usage error, 2 data or processing error.
Machine-readable results go to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, pipeline, topicmodel

VERBS = ("prep", "topics-train", "topics-select", "featurize", "train", "eval", "run",
         "score", "plot-data")
_UNTIL = {"prep": "prep", "topics-train": "topics", "featurize": "features",
          "train": "train", "eval": "eval", "run": "eval"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _parse_candidates(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("no candidates given")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="curio", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"curio {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)
    for verb in ("prep", "topics-train", "featurize", "train", "eval", "run"):
        sp = sub.add_parser(verb, help=f"run the pipeline through the {_UNTIL[verb]} stage")
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int, help="override the config's master seed")
        sp.add_argument("--out", type=Path, help="override the config's output directory")
        if verb == "run":
            sp.add_argument("--table", action="store_true",
                            help="also evaluate the SVM/LogReg x feature-set grid")
    sp = sub.add_parser("topics-select", help="coherence sweep over topic counts")
    sp.add_argument("--config", required=True, type=Path)
    sp.add_argument("--candidates", required=True, type=_parse_candidates,
                    help="e.g. 62-72 or 10,20,30")
    sp.add_argument("--corpus", choices=("reference", "dataset", "clickbait"), default="clickbait")
    sp.add_argument("--top-n", type=int, default=10)
    sp.add_argument("--iterations", type=int, help="override topic sweeps")
    sp.add_argument("--seed", type=int)
    sp = sub.add_parser("score", help="JSON curiosity profile of one headline")
    sp.add_argument("--model", required=True, type=Path, help="run directory")
    sp.add_argument("--text", required=True)
    sp = sub.add_parser("plot-data", help="binned histogram CSV for the novelty/surprise figures")
    sp.add_argument("--run", required=True, type=Path, help="run directory")
    sp.add_argument("--figure", required=True, choices=("novelty_hist", "surprise_hist"))
    sp.add_argument("--panel", choices=("kl", "hellinger", "zero_run", "max_nonzero"))
    sp.add_argument("--bins", type=int, default=50)
    return p


def _load_config(args) -> pipeline.RunConfig:
    cfg = pipeline.RunConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.output_dir = str(args.out.resolve())
    return cfg


def histogram(values, classes, bins: int = 50):
    """Equal-width bins over the pooled range: (low, high, n_clickbait, n_non_clickbait)."""
    values = np.asarray(values, dtype=np.float64)
    classes = np.asarray(classes)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    cb, _ = np.histogram(values[classes == 1], bins=edges)
    nc, _ = np.histogram(values[classes == 0], bins=edges)
    return [(float(edges[i]), float(edges[i + 1]), int(cb[i]), int(nc[i])) for i in range(bins)]


def plot_data(run_dir: Path, figure: str, panel: str | None = None, bins: int = 50, out=None) -> None:
    out = out or sys.stdout
    name = "novelty_hist.csv" if figure == "novelty_hist" else "surprise_hist.csv"
    panel = panel or ("kl" if figure == "novelty_hist" else "zero_run")
    allowed = ("kl", "hellinger") if figure == "novelty_hist" else ("zero_run", "max_nonzero")
    if panel not in allowed:
        raise UsageError(f"panel {panel!r} does not belong to {figure}")
    if bins < 1:
        raise UsageError("--bins must be positive")
    path = Path(run_dir) / name
    if not path.exists():
        raise FileNotFoundError(f"missing artifact {path}")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: test partition is empty")
    values = [float(r[panel]) for r in rows]
    classes = [int(r["class"]) for r in rows]
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["bin_low", "bin_high", "count_clickbait", "count_nonclickbait"])
    for row in histogram(values, classes, bins):
        w.writerow([repr(row[0]), repr(row[1]), row[2], row[3]])


def _topics_select(args) -> None:
    cfg = pipeline.RunConfig.load(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    if args.corpus == "reference":
        ref = pipeline.load_reference(cfg.resolve(cfg.reference["path"]))
        docs = pipeline._window(ref, cfg.reference.get("topic_window")).token_lists()
    else:
        heads = pipeline.load_dataset(cfg)
        docs = [h.tokens for h in heads if args.corpus == "dataset" or h.label == 1]
    t = cfg.topics
    best, table = topicmodel.select_num_topics(
        docs, args.candidates, top_n=args.top_n, beta=float(t["beta"]),
        iterations=args.iterations or int(t["iterations"]), seed=seed + pipeline.SEED_OFFSETS["topics"])
    json.dump({"best": best, "scores": [{"num_topics": k, "coherence": c} for k, c in table]},
              sys.stdout, indent=2)
    sys.stdout.write("\n")


def _dispatch(args) -> None:
    if args.verb in _UNTIL:
        cfg = _load_config(args)
        manifest = pipeline.run(cfg, until=_UNTIL[args.verb])
        out = cfg.out_dir()
        if args.verb in ("eval", "run"):
            sys.stdout.write((out / "report.txt").read_text())
            if getattr(args, "table", False):
                from .classifier import format_table
                rows = pipeline.evaluate_grid(out, cfg)
                text = format_table(rows) + "\n"
                (out / "table.txt").write_text(text)
                sys.stdout.write(text)
        else:
            json.dump(manifest.to_json(), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
    elif args.verb == "topics-select":
        _topics_select(args)
    elif args.verb == "score":
        json.dump(pipeline.score(args.model, args.text), sys.stdout, indent=2)
        sys.stdout.write("\n")
    elif args.verb == "plot-data":
        plot_data(args.run, args.figure, args.panel, args.bins)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb is None:
            raise UsageError(parser.format_usage() + "curio: error: a verb is required")
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except UsageError as exc:
        sys.stderr.write(f"curio: error: {exc}\n")
        return 1
    except pipeline.StageError as exc:
        sys.stderr.write(f"curio: {exc}\n")
        return 2
    except (OSError, ValueError, KeyError, IndexError) as exc:
        sys.stderr.write(f"curio: {args.verb}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

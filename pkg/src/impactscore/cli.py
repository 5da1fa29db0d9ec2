"""Command-line entry point: ``impactscore <command> ...``.

Machine-readable results go to stdout; human summaries go to stderr.

Exit codes: 0 success, 1 unexpected failure, 2 malformed input or bad
arguments, 3 non-finite training loss, 4 nothing left to explain after
normalization, 5 unreadable model file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus as corpus_mod
from .corpus import CorpusError, make_document
from .explain import ExplainConfig, explain, render
from .features import FeatureConfig
from .metrics import (
    confusion,
    emit_curves,
    read_curves,
    render_report,
    render_summary,
    report,
    report_to_dict,
)
from .model import (
    EpochRecord,
    LinearClassifier,
    ModelFormatError,
    TrainConfig,
    TrainingDiverged,
    load,
    record_to_dict,
    save,
)
from .schedule import PRESETS, Cycle, CyclePlan, CheckpointError, find_lr, run_cycles

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_DIVERGED = 3
EXIT_EMPTY = 4
EXIT_MODEL = 5

_PATH_ARGS = {
    "input", "output", "corpus", "train_out", "valid_out", "model", "model_out",
    "history", "history_out", "checkpoint_dir", "svg",
}

COMMANDS = ("ingest", "split", "train", "find-lr", "evaluate", "predict", "explain", "report")


@dataclass(frozen=True)
class CustomSchedule:
    kind: str = "sgdr"
    cycles: int = 1
    epochs: int = 8
    lr_max: float = 1e-5
    lr_min: float = 0.0
    pct_up: float = 0.5
    div_factor: float = 25.0
    final_div: float = 1e4

    def plan(self) -> CyclePlan:
        c = Cycle(
            self.kind, self.epochs, self.lr_max, self.lr_min, self.pct_up, self.div_factor, self.final_div
        )
        return CyclePlan(tuple(c for _ in range(self.cycles)))


_SECTIONS = {
    "feature": FeatureConfig,
    "train": TrainConfig,
    "schedule": CustomSchedule,
    "explain": ExplainConfig,
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    paths: dict[str, Path] = field(default_factory=dict)
    seed: int = 0
    overrides: dict[str, dict[str, object]] = field(default_factory=dict)

    def build(self, section: str, base=None, **fixed):
        cls = _SECTIONS[section]
        obj = base if base is not None else cls()
        values = {**self.overrides.get(section, {}), **fixed}
        try:
            return dataclasses.replace(obj, **values)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid {section} settings: {exc}") from exc


def _coerce(raw: str, typ: str):
    if typ == "int":
        as_float = float(raw)
        if not as_float.is_integer():
            raise ValueError(raw)
        return int(as_float)
    if typ == "float":
        return float(raw)
    return raw


def parse_overrides(pairs: list[str]) -> dict[str, dict[str, object]]:
    """``section.key=value`` pairs to typed per-section dicts; unknown keys are errors."""
    out: dict[str, dict[str, object]] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise UsageError(f"override {pair!r} is not of the form section.key=value")
        cls = _SECTIONS.get(section)
        if cls is None:
            raise UsageError(f"unknown override section {section!r} (expected one of {sorted(_SECTIONS)})")
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        if name not in types or name == "seed":
            raise UsageError(f"unknown override key {key!r}")
        try:
            value = _coerce(raw.strip(), types[name])
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {raw!r}") from exc
        out.setdefault(section, {})[name] = value
    return out


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _ingest(args, rc: RunConfig) -> int:
    records = corpus_mod.load_records(args.input, has_labels=not args.no_labels, delimiter=args.delimiter)
    if args.no_labels:
        docs = [make_document(r.id, r.text) for r in records]
        corpus_mod.write_jsonl(args.output, docs)
        _err(f"{len(docs)} records (unlabeled)")
        return EXIT_OK
    corp = corpus_mod.binarize(records)
    corpus_mod.write_jsonl(args.output, corp.documents, corp.labels)
    counts = corp.counts()
    _err(f"{len(corp)} records: neg={counts['neg']}, pos={counts['pos']}")
    return EXIT_OK


def _split(args, rc: RunConfig) -> int:
    corp = corpus_mod.read_corpus(args.corpus)
    tr, va = corpus_mod.stratified_split(corp, args.valid_fraction, rc.seed)
    corpus_mod.write_jsonl(args.train_out, tr.documents, tr.labels)
    corpus_mod.write_jsonl(args.valid_out, va.documents, va.labels)
    print(json.dumps({"train": len(tr), "valid": len(va)}))
    _err(f"train: {tr.counts()}  valid: {va.counts()}")
    return EXIT_OK


def _train(args, rc: RunConfig) -> int:
    corp = corpus_mod.read_corpus(args.corpus)
    tr, va = corpus_mod.stratified_split(corp, args.valid_fraction, rc.seed)
    fc = rc.build("feature")
    tc = rc.build("train", seed=rc.seed)
    if args.plan == "custom":
        plan = rc.build("schedule").plan()
    else:
        if "schedule" in rc.overrides:
            raise UsageError("schedule.* overrides apply only to --plan custom")
        plan = PRESETS[args.plan]()
    model_out = Path(args.model_out)
    history_out = Path(args.history_out) if args.history_out else model_out.with_suffix(".history.csv")
    res = run_cycles(
        LinearClassifier.zeros(fc), tr, va, plan, tc, checkpoint_dir=args.checkpoint_dir
    )
    # the best checkpoint only knows the epochs up to its cycle; keep the whole run
    meta = {**res.model.train_meta, "epochs": len(res.history),
            "history": [record_to_dict(r) for r in res.history]}
    save(dataclasses.replace(res.model, train_meta=meta), model_out)
    emit_curves(res.history, history_out)
    best_val = res.scores[res.best_cycle - 1]
    print(
        json.dumps(
            {
                "model": str(model_out),
                "history": str(history_out),
                "epochs": len(res.history),
                "best_cycle": res.best_cycle,
                "val_acc": best_val,
            }
        )
    )
    _err(f"final validation accuracy {best_val:.4f} (cycle {res.best_cycle} of {len(plan.cycles)})")
    return EXIT_OK


def _find_lr(args, rc: RunConfig) -> int:
    corp = corpus_mod.read_corpus(args.corpus)
    fc = rc.build("feature")
    tc = rc.build("train", seed=rc.seed)
    res = find_lr(LinearClassifier.zeros(fc), corp, args.lr_lo, args.lr_hi, args.steps, tc)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lr", "loss"])
        for lr, loss in zip(res.lrs, res.losses):
            w.writerow([repr(float(lr)), repr(float(loss))])
    print(json.dumps({"suggestion": res.suggestion, "points": len(res.lrs), "diverged": res.diverged}))
    _err(f"suggested learning rate {res.suggestion:.3g}")
    return EXIT_OK


def _evaluate(args, rc: RunConfig) -> int:
    model = load(args.model)
    corp = corpus_mod.read_corpus(args.corpus)
    if len(corp) == 0:
        raise CorpusError("evaluation corpus is empty")
    probs = model.predict_texts([d.normalized_text for d in corp.documents])
    predicted = [corpus_mod.BinaryLabel.from_pos(p >= 0.5) for p in probs]
    rep = report(confusion(predicted, corp.labels, positive=args.positive))
    print(json.dumps(report_to_dict(rep)))
    _err(render_report(rep))
    _err("")
    _err(render_summary(rep))
    return EXIT_OK


def _predict(args, rc: RunConfig) -> int:
    model = load(args.model)
    if args.input:
        docs, _ = corpus_mod.read_jsonl(args.input)
    else:
        docs = [make_document(str(i), t) for i, t in enumerate(args.text or [])]
    if not docs:
        _err("0 documents")
        return EXIT_OK
    probs = model.predict_texts([d.normalized_text for d in docs])
    for d, p in zip(docs, probs):
        print(json.dumps({"id": d.id, "pos_proba": float(p), "label": "NOT" if p >= 0.5 else "HOF"}))
    n_hof = int((probs < 0.5).sum())
    _err(f"{len(docs)} documents: HOF={n_hof}, NOT={len(docs) - n_hof}")
    return EXIT_OK


def _explain(args, rc: RunConfig) -> int:
    model = load(args.model)
    doc = make_document("", args.text)
    if not doc.tokens:
        _err("nothing to explain: the sentence has no tokens after normalization")
        return EXIT_EMPTY
    fixed = {"seed": rc.seed}
    if args.samples is not None:
        fixed["n_samples"] = args.samples
    cfg = rc.build("explain", **fixed)
    expl = explain(doc, model.predict_texts, cfg)
    print(render(expl, args.format, color=args.color))
    return EXIT_OK


def _report(args, rc: RunConfig) -> int:
    if args.model:
        rows = load(args.model).train_meta.get("history") or []
        history = [
            EpochRecord(**{**r, "val_acc": float("nan") if r["val_acc"] is None else r["val_acc"]})
            for r in rows
        ]
    else:
        history = read_curves(args.history)
    if not history:
        raise CorpusError("no training history to report")
    emit_curves(history, args.output, args.svg)
    print(json.dumps({"curves": str(args.output), "svg": str(args.svg) if args.svg else None, "epochs": len(history)}))
    last = history[-1]
    _err(f"{len(history)} epochs; last train_acc={last.train_acc:.4f} val_acc={last.val_acc:.4f}")
    return EXIT_OK


_HANDLERS = {
    "ingest": _ingest,
    "split": _split,
    "train": _train,
    "find-lr": _find_lr,
    "evaluate": _evaluate,
    "predict": _predict,
    "explain": _explain,
    "report": _report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="impactscore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        return p

    p = add("ingest", "normalize and label a HASOC-style file into a JSON-lines corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--no-labels", action="store_true")
    p.add_argument("--delimiter", default=None, help="field delimiter (default: sniffed from header)")

    p = add("split", "stratified train/validation split of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--valid-out", required=True)
    p.add_argument("--valid-fraction", type=float, default=0.2)

    p = add("train", "train with a multi-cycle plan and keep the best checkpoint")
    p.add_argument("--corpus", required=True)
    p.add_argument("--valid-fraction", type=float, default=0.2)
    p.add_argument("--plan", choices=("A", "B", "custom"), default="B")
    p.add_argument("--model-out", required=True)
    p.add_argument("--history-out", default=None)
    p.add_argument("--checkpoint-dir", default=None)

    p = add("find-lr", "learning-rate range test")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--lr-lo", type=float, default=1e-7)
    p.add_argument("--lr-hi", type=float, default=1e-1)
    p.add_argument("--steps", type=int, default=100)

    p = add("evaluate", "classification report on a labeled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--positive", choices=("pos", "neg"), default="pos")

    p = add("predict", "class probabilities for unlabeled documents")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--text", action="append")

    p = add("explain", "per-word impact scores for one sentence")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--color", action="store_true")

    p = add("report", "write training curves (CSV, optional SVG)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--history")
    p.add_argument("--output", required=True)
    p.add_argument("--svg", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = {
            k: Path(v)
            for k, v in vars(args).items()
            if k in _PATH_ARGS and isinstance(v, str)
        }
        rc = RunConfig(args.command, paths, args.seed, parse_overrides(args.overrides))
        return _HANDLERS[args.command](args, rc)
    except (CorpusError, UsageError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT
    except TrainingDiverged as exc:
        _err(f"error: {exc}")
        return EXIT_DIVERGED
    except ModelFormatError as exc:
        _err(f"error: {exc}")
        return EXIT_MODEL
    except CheckpointError as exc:
        _err(f"error: {exc}")
        return EXIT_FAILURE
    except (OSError, ValueError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT if isinstance(exc, (FileNotFoundError, ValueError)) else EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Confusion-matrix metrics, classification reports and training curves."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .corpus import BinaryLabel
from .model import EpochRecord

CURVE_COLUMNS = ("epoch", "cycle", "lr", "train_loss", "train_acc", "val_acc")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary counts with ``positive`` naming the class treated as positive."""

    tp: int
    fp: int
    fn: int
    tn: int
    positive: str = "pos"

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be non-negative")
        if self.positive not in ("pos", "neg"):
            raise ValueError(f"positive must be 'pos' or 'neg', got {self.positive!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def negative(self) -> str:
        return "neg" if self.positive == "pos" else "pos"

    def swapped(self) -> "ConfusionMatrix":
        """Same predictions read with the other class as positive."""
        return ConfusionMatrix(self.tn, self.fn, self.fp, self.tp, positive=self.negative)


def confusion(
    predicted: Sequence[BinaryLabel],
    actual: Sequence[BinaryLabel],
    positive: str = "pos",
) -> ConfusionMatrix:
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(actual)} actual")
    if not predicted:
        raise ValueError("cannot build a confusion matrix from empty label lists")
    tp = fp = fn = tn = 0
    for p, a in zip(predicted, actual):
        p_pos = getattr(p, positive) == 1
        a_pos = getattr(a, positive) == 1
        if p_pos and a_pos:
            tp += 1
        elif p_pos:
            fp += 1
        elif a_pos:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn, positive=positive)


def _ratio(num: int, den: int, name: str, undefined: set[str]) -> float:
    if den == 0:
        undefined.add(name)
        return 0.0
    return num / den


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassReport:
    per_class: dict[str, ClassMetrics]
    positive: str
    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    macro: ClassMetrics
    weighted: ClassMetrics
    total: int
    undefined: frozenset[str] = field(default_factory=frozenset)


def report(cm: ConfusionMatrix) -> ClassReport:
    """Per-class and averaged metrics.

    Zero denominators give 0.0 and the metric's name lands in ``undefined``
    (e.g. ``"precision:pos"``).
    """
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    undefined: set[str] = set()
    P, N = cm.positive, cm.negative
    prec_p = _ratio(cm.tp, cm.tp + cm.fp, f"precision:{P}", undefined)
    rec_p = _ratio(cm.tp, cm.tp + cm.fn, f"recall:{P}", undefined)
    prec_n = _ratio(cm.tn, cm.tn + cm.fn, f"precision:{N}", undefined)
    rec_n = _ratio(cm.tn, cm.tn + cm.fp, f"recall:{N}", undefined)
    per_class = {
        P: ClassMetrics(prec_p, rec_p, _f1(prec_p, rec_p), cm.tp + cm.fn),
        N: ClassMetrics(prec_n, rec_n, _f1(prec_n, rec_n), cm.tn + cm.fp),
    }
    classes = list(per_class.values())
    macro = ClassMetrics(
        sum(c.precision for c in classes) / 2,
        sum(c.recall for c in classes) / 2,
        sum(c.f1 for c in classes) / 2,
        cm.total,
    )
    weighted = ClassMetrics(
        sum(c.precision * c.support for c in classes) / cm.total,
        sum(c.recall * c.support for c in classes) / cm.total,
        sum(c.f1 * c.support for c in classes) / cm.total,
        cm.total,
    )
    return ClassReport(
        per_class=per_class,
        positive=P,
        accuracy=(cm.tp + cm.tn) / cm.total,
        precision=prec_p,
        recall=rec_p,
        specificity=rec_n,
        f1=per_class[P].f1,
        macro=macro,
        weighted=weighted,
        total=cm.total,
        undefined=frozenset(undefined),
    )


def render_report(rep: ClassReport, names: dict[str, str] | None = None, digits: int = 4) -> str:
    """Per-class table (precision, recall, f1-score, support) with average rows."""
    names = names or {"pos": "NOT", "neg": "HOF"}
    w = max(len("weighted avg"), *(len(v) for v in names.values()))
    head = f"{'':>{w}}  {'precision':>9}  {'recall':>9}  {'f1-score':>9}  {'support':>9}"
    lines = [head, ""]
    for key in ("neg", "pos"):
        m = rep.per_class[key]
        lines.append(
            f"{names[key]:>{w}}  {m.precision:>9.{digits}f}  {m.recall:>9.{digits}f}  "
            f"{m.f1:>9.{digits}f}  {m.support:>9d}"
        )
    lines.append("")
    lines.append(f"{'accuracy':>{w}}  {'':>9}  {'':>9}  {rep.accuracy:>9.{digits}f}  {rep.total:>9d}")
    for label, m in (("macro avg", rep.macro), ("weighted avg", rep.weighted)):
        lines.append(
            f"{label:>{w}}  {m.precision:>9.{digits}f}  {m.recall:>9.{digits}f}  "
            f"{m.f1:>9.{digits}f}  {m.support:>9d}"
        )
    return "\n".join(lines)


def render_summary(rep: ClassReport) -> str:
    """Headline metrics for the positive class, as fraction and percentage."""
    rows = [
        ("accuracy", rep.accuracy),
        ("precision", rep.precision),
        ("recall", rep.recall),
        ("specificity", rep.specificity),
        ("f1", rep.f1),
    ]
    return "\n".join(f"{name} {value:.4f} ({100 * value:.2f}%)" for name, value in rows)


def report_to_dict(rep: ClassReport) -> dict:
    return {
        "positive": rep.positive,
        "accuracy": rep.accuracy,
        "precision": rep.precision,
        "recall": rep.recall,
        "specificity": rep.specificity,
        "f1": rep.f1,
        "per_class": {k: vars(v) for k, v in rep.per_class.items()},
        "macro": vars(rep.macro),
        "weighted": vars(rep.weighted),
        "total": rep.total,
        "undefined": sorted(rep.undefined),
    }


def _fmt(v: float) -> str:
    return "" if isinstance(v, float) and math.isnan(v) else repr(float(v))


def emit_curves(
    history: Sequence[EpochRecord], path: str | Path, svg_path: str | Path | None = None
) -> Path:
    """Write the per-epoch history CSV and, optionally, an accuracy-vs-epoch SVG."""
    if not history:
        raise ValueError("history is empty")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for r in history:
            writer.writerow(
                [r.epoch, r.cycle, _fmt(r.lr), _fmt(r.train_loss), _fmt(r.train_acc), _fmt(r.val_acc)]
            )
    if svg_path is not None:
        Path(svg_path).write_text(render_svg(history), encoding="utf-8")
    return path


def read_curves(path: str | Path) -> list[EpochRecord]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                EpochRecord(
                    epoch=int(row["epoch"]),
                    cycle=int(row["cycle"]),
                    **{
                        f.name: float(row[f.name]) if row[f.name] != "" else float("nan")
                        for f in fields(EpochRecord)
                        if f.name not in ("epoch", "cycle")
                    },
                )
            )
    return out


def render_svg(history: Sequence[EpochRecord], width: int = 640, height: int = 360) -> str:
    """Minimal line chart of train and validation accuracy per epoch."""
    pad = 40
    n = len(history)
    xs = [r.epoch for r in history]
    x0, x1 = min(xs), max(xs)

    def sx(e):
        return pad + (e - x0) / ((x1 - x0) or 1) * (width - 2 * pad)

    def sy(a):
        return height - pad - a * (height - 2 * pad)

    def polyline(attr, color):
        pts = [
            f"{sx(r.epoch):.2f},{sy(getattr(r, attr)):.2f}"
            for r in history
            if not math.isnan(getattr(r, attr))
        ]
        if not pts:
            return ""
        return f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{" ".join(pts)}"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        polyline("train_acc", "#1f77b4"),
        polyline("val_acc", "#ff7f0e"),
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12">epoch (1..{n})</text>',
        f'<text x="{pad + 8}" y="{pad - 12}" font-size="12" fill="#1f77b4">train acc</text>',
        f'<text x="{pad + 88}" y="{pad - 12}" font-size="12" fill="#ff7f0e">val acc</text>',
        "</svg>",
    ]
    return "\n".join(p for p in parts if p) + "\n"

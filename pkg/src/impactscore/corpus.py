"""Loading, normalizing and splitting HASOC-style tweet corpora.

Labels follow the two-column neg/pos scheme: a hateful/offensive tweet
(``HOF``) is ``neg=1, pos=0`` and a non-hateful one (``NOT``) is
``neg=0, pos=1``.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import tokenize

LABELS = ("HOF", "NOT")

_URL_RE = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)
_EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"  # pictographs, emoticons, transport, flags, modifiers
    "\U00002600-\U000027BF"  # misc symbols and dingbats
    "\U00002300-\U000023FF"  # misc technical (watch, hourglass, ...)
    "\U00002B00-\U00002BFF"  # arrows, stars
    "\U0000FE00-\U0000FE0F"  # variation selectors
    "\U0000200D"  # zero-width joiner
    "\U000020E3"  # combining keycap
    "\U000E0020-\U000E007F"  # tag sequences
    "]"
)


class CorpusError(ValueError):
    """Malformed corpus input. ``line`` is the 1-based physical line, if known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class RawRecord:
    id: str
    text: str
    task_label: str | None = None


@dataclass(frozen=True)
class Document:
    id: str
    raw_text: str
    normalized_text: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class BinaryLabel:
    neg: int
    pos: int

    def __post_init__(self):
        if {self.neg, self.pos} != {0, 1}:
            raise ValueError(f"neg + pos must be exactly 1, got neg={self.neg} pos={self.pos}")

    @classmethod
    def from_pos(cls, pos: int | bool) -> "BinaryLabel":
        return cls(neg=1 - int(pos), pos=int(pos))

    @classmethod
    def from_task(cls, task_label: str) -> "BinaryLabel":
        if task_label == "HOF":
            return cls(neg=1, pos=0)
        if task_label == "NOT":
            return cls(neg=0, pos=1)
        raise ValueError(f"label must be one of {LABELS}, got {task_label!r}")


NEG = BinaryLabel(neg=1, pos=0)
POS = BinaryLabel(neg=0, pos=1)


@dataclass(frozen=True)
class LabeledCorpus:
    documents: tuple[Document, ...]
    labels: tuple[BinaryLabel, ...]

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.documents) != len(self.labels):
            raise ValueError(
                f"{len(self.documents)} documents but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def y(self) -> np.ndarray:
        """Pos-class indicator vector (1 = non-hateful)."""
        return np.array([lab.pos for lab in self.labels], dtype=np.float64)

    def counts(self) -> dict[str, int]:
        pos = sum(lab.pos for lab in self.labels)
        return {"neg": len(self.labels) - pos, "pos": pos}

    def subset(self, indices: Iterable[int]) -> "LabeledCorpus":
        idx = list(indices)
        return LabeledCorpus(
            tuple(self.documents[i] for i in idx), tuple(self.labels[i] for i in idx)
        )


def normalize(text: str) -> str:
    """Strip emojis and URLs, lowercase, and collapse whitespace.

    Emojis go first so that deleting one can never splice a URL together,
    which keeps the function idempotent. @mentions and #hashtags are kept.
    """
    text = _EMOJI_RE.sub("", text)
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    return " ".join(text.split())


def make_document(doc_id: str, text: str) -> Document:
    normalized = normalize(text)
    return Document(doc_id, text, normalized, tuple(tokenize(normalized)))


def _sniff_delimiter(header: str, delimiter: str | None) -> str:
    if delimiter is not None:
        return delimiter
    return "\t" if "\t" in header else ","


def load_records(
    path: str | Path, has_labels: bool = True, delimiter: str | None = None
) -> list[RawRecord]:
    """Read a delimited tweet file with a header row.

    Required columns are ``id`` and ``text``, plus ``task_1`` when
    ``has_labels``. Extra columns are ignored. The delimiter is tab if the
    header line contains a tab, otherwise comma, unless given explicitly.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"no such file: {path}")
    with open(path, encoding="utf-8-sig", newline="") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise CorpusError("missing header row", line=1)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=_sniff_delimiter(header_line, delimiter))
        header = [h.strip() for h in next(reader)]
        required = ["id", "text"] + (["task_1"] if has_labels else [])
        missing = [c for c in required if c not in header]
        if missing:
            raise CorpusError(f"missing required column(s): {', '.join(missing)}", line=1)
        col = {name: header.index(name) for name in required}

        records: list[RawRecord] = []
        seen: set[str] = set()
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise CorpusError(
                    f"expected {len(header)} fields, found {len(row)}", line=line
                )
            rec_id = row[col["id"]].strip()
            text = row[col["text"]]
            if not rec_id:
                raise CorpusError("missing id", line=line)
            if not text.strip():
                raise CorpusError(f"missing text for id {rec_id!r}", line=line)
            if rec_id in seen:
                raise CorpusError(f"duplicate id {rec_id!r}", line=line)
            seen.add(rec_id)
            label = None
            if has_labels:
                label = row[col["task_1"]].strip()
                if label not in LABELS:
                    raise CorpusError(
                        f"label {label!r} for id {rec_id!r} is not one of {LABELS}",
                        line=line,
                    )
            records.append(RawRecord(rec_id, text, label))
    return records


def binarize(records: Sequence[RawRecord]) -> LabeledCorpus:
    """Normalize and tokenize labeled records into a neg/pos corpus."""
    docs, labels = [], []
    for rec in records:
        if rec.task_label is None:
            raise ValueError(f"record {rec.id!r} has no task label")
        labels.append(BinaryLabel.from_task(rec.task_label))
        docs.append(make_document(rec.id, rec.text))
    return LabeledCorpus(tuple(docs), tuple(labels))


def stratified_split(
    corpus: LabeledCorpus, valid_fraction: float, seed: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Seeded per-class random split into (train, valid).

    Each class contributes ``round(valid_fraction * n_class)`` documents to
    the validation side. Both halves keep the corpus' original order.
    """
    if not 0.0 < valid_fraction < 1.0:
        raise ValueError(f"valid_fraction must be in (0, 1), got {valid_fraction}")
    y = corpus.y
    rng = np.random.default_rng(seed)
    valid_idx: list[int] = []
    for cls in (0.0, 1.0):
        members = np.flatnonzero(y == cls)
        if members.size == 0:
            name = "pos" if cls else "neg"
            raise ValueError(f"class {name!r} has no members")
        n_valid = int(round(valid_fraction * members.size))
        valid_idx.extend(rng.permutation(members)[:n_valid].tolist())
    in_valid = np.zeros(len(corpus), dtype=bool)
    in_valid[valid_idx] = True
    return (
        corpus.subset(np.flatnonzero(~in_valid).tolist()),
        corpus.subset(np.flatnonzero(in_valid).tolist()),
    )


def write_jsonl(
    path: str | Path,
    documents: Sequence[Document],
    labels: Sequence[BinaryLabel] | None = None,
) -> None:
    """Write the canonical corpus file: one ``{id, text, neg, pos}`` object per line.

    ``text`` is the normalized text. Unlabeled corpora omit ``neg``/``pos``.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for i, doc in enumerate(documents):
            row: dict = {"id": doc.id, "text": doc.normalized_text}
            if labels is not None:
                row["neg"] = labels[i].neg
                row["pos"] = labels[i].pos
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> tuple[list[Document], list[BinaryLabel] | None]:
    """Inverse of :func:`write_jsonl`. Labels are ``None`` if no row carries them."""
    docs: list[Document] = []
    labels: list[BinaryLabel] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                docs.append(make_document(str(row["id"]), row["text"]))
                if "neg" in row or "pos" in row:
                    labels.append(BinaryLabel(int(row["neg"]), int(row["pos"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"bad corpus row: {exc}", line=lineno) from exc
    if labels and len(labels) != len(docs):
        raise CorpusError("some rows are labeled and some are not")
    return docs, (labels if labels else None)


def read_corpus(path: str | Path) -> LabeledCorpus:
    docs, labels = read_jsonl(path)
    if labels is None:
        if docs:
            raise CorpusError(f"{path} has no labels")
        labels = []
    return LabeledCorpus(tuple(docs), tuple(labels))

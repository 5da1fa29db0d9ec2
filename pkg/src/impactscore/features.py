"""Word n-gram features with the hashing trick.

N-grams are joined with a single space and hashed with keyed BLAKE2b
(64-bit digest, little-endian) modulo the hash dimension. Colliding n-grams
add their weights. The hash name and key are written into model files so a
reloaded model can refuse features it was not trained on.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

HASH_NAME = "blake2b-64"
HASH_KEY = "impactscore-ngram-v1"
_HASH_KEY_BYTES = HASH_KEY.encode("ascii")

WEIGHTINGS = ("binary", "term-frequency")

_EDGE_RE = re.compile(r"^\W+|\W+$")
_LEAD_MARK_RE = re.compile(r"^[^\w@#]*([@#])")


@dataclass(frozen=True)
class FeatureConfig:
    ngram_max: int = 3
    max_tokens: int = 75
    hash_dimension: int = 2**18
    weighting: str = "term-frequency"

    def __post_init__(self):
        if not 1 <= self.ngram_max <= 5:
            raise ValueError(f"ngram_max must be in [1, 5], got {self.ngram_max}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")
        d = self.hash_dimension
        if d < 2 or d & (d - 1):
            raise ValueError(f"hash_dimension must be a power of two >= 2, got {d}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")

    def to_dict(self) -> dict:
        return {
            "ngram_max": self.ngram_max,
            "max_tokens": self.max_tokens,
            "hash_dimension": self.hash_dimension,
            "weighting": self.weighting,
            "hash": HASH_NAME,
            "hash_key": HASH_KEY,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureConfig":
        if d.get("hash", HASH_NAME) != HASH_NAME or d.get("hash_key", HASH_KEY) != HASH_KEY:
            raise ValueError(
                f"feature hash {d.get('hash')}/{d.get('hash_key')} does not match "
                f"{HASH_NAME}/{HASH_KEY}"
            )
        return cls(
            ngram_max=int(d["ngram_max"]),
            max_tokens=int(d["max_tokens"]),
            hash_dimension=int(d["hash_dimension"]),
            weighting=str(d["weighting"]),
        )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Sparse non-negative vector: sorted unique ``indices`` with positive ``values``."""

    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.int64)
        val = np.array(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be parallel 1-d arrays")
        if idx.size and (idx.min() < 0 or idx.max() >= self.dimension):
            raise ValueError(f"feature index out of range [0, {self.dimension})")
        if np.any(val <= 0):
            raise ValueError("feature weights must be positive")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_dict(cls, entries: Mapping[int, float], dimension: int) -> "FeatureVector":
        items = sorted((int(k), float(v)) for k, v in entries.items() if v != 0)
        return cls(
            np.array([k for k, _ in items], dtype=np.int64),
            np.array([v for _, v in items], dtype=np.float64),
            dimension,
        )

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def dot(self, dense: np.ndarray) -> float:
        return float(np.dot(dense[self.indices], self.values))


def _clean_token(tok: str) -> str:
    core = _EDGE_RE.sub("", tok)
    if not core:
        return ""
    m = _LEAD_MARK_RE.match(tok)
    return m.group(1) + core if m else core


def tokenize(text: str) -> list[str]:
    """Whitespace split, then trim punctuation from token edges.

    A leading ``@`` or ``#`` survives the trim so mentions and hashtags stay
    recognisable. Tokens that are all punctuation are dropped.
    """
    out = []
    for tok in text.split():
        tok = _clean_token(tok)
        if tok:
            out.append(tok)
    return out


def extract_ngrams(
    tokens: Sequence[str], ngram_max: int, max_tokens: int | None = None
) -> list[str]:
    """All contiguous n-grams for n = 1..ngram_max, unigrams first."""
    if ngram_max < 1:
        raise ValueError(f"ngram_max must be >= 1, got {ngram_max}")
    toks = list(tokens if max_tokens is None else tokens[:max_tokens])
    grams: list[str] = []
    for n in range(1, ngram_max + 1):
        grams.extend(" ".join(toks[i : i + n]) for i in range(len(toks) - n + 1))
    return grams


def hash_ngram(ngram: str, dimension: int) -> int:
    digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8, key=_HASH_KEY_BYTES).digest()
    return int.from_bytes(digest, "little") % dimension


def vectorize_tokens(tokens: Sequence[str], config: FeatureConfig) -> FeatureVector:
    grams = extract_ngrams(tokens, config.ngram_max, config.max_tokens)
    counts = Counter(grams)
    entries: dict[int, float] = {}
    for gram, c in counts.items():
        idx = hash_ngram(gram, config.hash_dimension)
        w = float(c) if config.weighting == "term-frequency" else 1.0
        entries[idx] = entries.get(idx, 0.0) + w
    return FeatureVector.from_dict(entries, config.hash_dimension)


def vectorize(doc, config: FeatureConfig) -> FeatureVector:
    """Hash a :class:`~impactscore.corpus.Document` (or a token list) into a vector."""
    tokens = doc.tokens if hasattr(doc, "tokens") else doc
    return vectorize_tokens(tokens, config)


def to_csr(vectors: Iterable[FeatureVector], dimension: int) -> sparse.csr_matrix:
    """Stack feature vectors into a CSR design matrix."""
    indptr = [0]
    indices, data = [], []
    for v in vectors:
        if v.dimension != dimension:
            raise ValueError(f"vector dimension {v.dimension} != {dimension}")
        indices.append(v.indices)
        data.append(v.values)
        indptr.append(indptr[-1] + len(v))
    ind = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
    dat = np.concatenate(data) if data else np.zeros(0, dtype=np.float64)
    return sparse.csr_matrix(
        (dat, ind, np.asarray(indptr, dtype=np.int64)), shape=(len(indptr) - 1, dimension)
    )

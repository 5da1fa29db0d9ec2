"""Seeded synthetic corpora for smoke tests and walkthroughs."""

from __future__ import annotations

import itertools

import numpy as np

from .corpus import NEG, POS, LabeledCorpus, make_document

_SYLLABLES = ("ba", "ko", "mi", "ru", "te", "zo", "la", "ne", "pi", "su", "da", "fe")


def filler_vocabulary(size: int = 300, seed: int = 0) -> list[str]:
    """Pronounceable nonsense words, deterministic for a given seed."""
    words = ["".join(p) for p in itertools.product(_SYLLABLES, repeat=3)]
    rng = np.random.default_rng(seed)
    return sorted(rng.choice(words, size=size, replace=False).tolist())


def marker_corpus(
    n_docs: int = 500,
    neg_fraction: float = 0.5,
    marker: str = "freak",
    min_len: int = 6,
    max_len: int = 14,
    vocab_size: int = 300,
    seed: int = 0,
) -> LabeledCorpus:
    """Corpus where a document is ``neg`` exactly when it contains ``marker``.

    Every document is a random string of filler words; ``neg`` documents get
    the marker inserted at a random position.
    """
    rng = np.random.default_rng(seed)
    vocab = filler_vocabulary(vocab_size, seed)
    if marker in vocab:
        raise ValueError(f"marker {marker!r} collides with the filler vocabulary")
    n_neg = int(round(neg_fraction * n_docs))
    is_neg = np.zeros(n_docs, dtype=bool)
    is_neg[rng.choice(n_docs, size=n_neg, replace=False)] = True
    docs, labels = [], []
    for i in range(n_docs):
        words = rng.choice(vocab, size=int(rng.integers(min_len, max_len + 1))).tolist()
        if is_neg[i]:
            words.insert(int(rng.integers(0, len(words) + 1)), marker)
        docs.append(make_document(f"syn-{i:04d}", " ".join(words)))
        labels.append(NEG if is_neg[i] else POS)
    return LabeledCorpus(tuple(docs), tuple(labels))


def two_token_corpus(n_docs: int = 40, seed: int = 0) -> LabeledCorpus:
    """Linearly separable toy corpus: ``"good"`` documents are pos, ``"bad"`` ones neg."""
    rng = np.random.default_rng(seed)
    docs, labels = [], []
    for i in range(n_docs):
        pos = bool(rng.integers(0, 2)) if i >= 2 else bool(i)
        docs.append(make_document(f"tt-{i:03d}", "good" if pos else "bad"))
        labels.append(POS if pos else NEG)
    return LabeledCorpus(tuple(docs), tuple(labels))

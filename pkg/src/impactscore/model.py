"""Binary logistic regression over hashed n-gram features.

The positive class is ``pos`` (non-hateful), so ``predict_proba`` returns
P(pos) and ``1 - P(pos)`` is the hate probability. Training is plain
mini-batch SGD on L2-regularized cross-entropy; the intercept is not
penalized. ``l2_strength`` plays the role of ``1/C`` in the usual
scikit-learn convention.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import expit

from .corpus import BinaryLabel, LabeledCorpus, normalize
from .features import FeatureConfig, FeatureVector, to_csr, tokenize, vectorize, vectorize_tokens

FORMAT_VERSION = 1
PROBA_CLAMP = 1e-12


class ModelFormatError(ValueError):
    pass


class TrainingDiverged(FloatingPointError):
    def __init__(self, step: int, loss: float, epoch: int):
        self.step = step
        self.loss = loss
        self.epoch = epoch
        super().__init__(f"non-finite training loss {loss} at step {step} (epoch {epoch})")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 1e-5
    l2_strength: float = 1e-4
    epochs: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2_strength < 0:
            raise ValueError(f"l2_strength must be >= 0, got {self.l2_strength}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    cycle: int
    lr: float
    train_loss: float
    train_acc: float
    val_acc: float


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    weights: np.ndarray
    intercept: float
    feature_config: FeatureConfig
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.feature_config.hash_dimension,):
            raise ValueError(
                f"weights have shape {w.shape}, expected ({self.feature_config.hash_dimension},)"
            )
        if not (np.all(np.isfinite(w)) and math.isfinite(self.intercept)):
            raise ValueError("model parameters must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))

    @classmethod
    def zeros(cls, feature_config: FeatureConfig | None = None) -> "LinearClassifier":
        fc = feature_config or FeatureConfig()
        return cls(np.zeros(fc.hash_dimension), 0.0, fc)

    def predict_texts(self, texts: Sequence[str]) -> np.ndarray:
        """P(pos) for raw texts; usable directly as a black box for ``explain``."""
        vecs = [vectorize_tokens(tokenize(normalize(t)), self.feature_config) for t in texts]
        X = to_csr(vecs, self.feature_config.hash_dimension)
        return expit(X @ self.weights + self.intercept)


def sigmoid(z):
    return expit(z)


def predict_logit(model: LinearClassifier, x: FeatureVector) -> float:
    return x.dot(model.weights) + model.intercept


def predict_proba(model: LinearClassifier, x: FeatureVector) -> float:
    """Probability of the pos class."""
    return float(expit(predict_logit(model, x)))


def _loss_grad(X: sparse.csr_matrix, y: np.ndarray, w: np.ndarray, b: float, lam: float):
    B = X.shape[0]
    # overflow only happens on a diverging run, which the caller detects from the loss
    with np.errstate(over="ignore", invalid="ignore"):
        p = expit(X @ w + b)
        pc = np.clip(p, PROBA_CLAMP, 1.0 - PROBA_CLAMP)
        loss = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)) + 0.5 * lam * float(w @ w)
        r = p - y
        grad_w = (X.T @ r) / B + lam * w
        grad_b = float(r.sum()) / B
    return float(loss), grad_w, grad_b


def loss_and_gradient(
    model: LinearClassifier,
    batch: Sequence[tuple[FeatureVector, BinaryLabel]],
    l2_strength: float,
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus ``(l2/2)*||w||^2`` and its gradient in (w, b)."""
    if not batch:
        raise ValueError("empty batch")
    X = to_csr([x for x, _ in batch], model.feature_config.hash_dimension)
    y = np.array([lab.pos for _, lab in batch], dtype=np.float64)
    return _loss_grad(X, y, model.weights, model.intercept, l2_strength)


@dataclass(frozen=True)
class EncodedCorpus:
    X: sparse.csr_matrix
    y: np.ndarray

    def __len__(self) -> int:
        return self.X.shape[0]


def encode(corpus: LabeledCorpus | EncodedCorpus, feature_config: FeatureConfig) -> EncodedCorpus:
    if isinstance(corpus, EncodedCorpus):
        if corpus.X.shape[1] != feature_config.hash_dimension:
            raise ValueError("encoded corpus dimension does not match the model")
        return corpus
    X = to_csr((vectorize(d, feature_config) for d in corpus.documents), feature_config.hash_dimension)
    return EncodedCorpus(X, corpus.y)


def accuracy(model: LinearClassifier, data: EncodedCorpus) -> float:
    if len(data) == 0:
        return float("nan")
    z = data.X @ model.weights + model.intercept
    return float(np.mean((z >= 0) == (data.y == 1)))


def steps_per_epoch(n_examples: int, batch_size: int) -> int:
    return -(-n_examples // batch_size)


@dataclass
class TrainResult:
    model: LinearClassifier
    history: list[EpochRecord]


def train(
    model: LinearClassifier,
    corpus: LabeledCorpus | EncodedCorpus,
    config: TrainConfig,
    schedule: Callable[[int], float] | None = None,
    valid: LabeledCorpus | EncodedCorpus | None = None,
    epochs: int | None = None,
    cycle: int = 0,
    epoch_offset: int = 0,
) -> TrainResult:
    """Mini-batch SGD from ``model``'s current parameters.

    ``schedule`` maps the step index within this call to a learning rate;
    without one ``config.learning_rate`` is used throughout. ``epochs``
    overrides ``config.epochs`` (zero returns the model untouched).
    Data is reshuffled every epoch with ``np.random.default_rng(config.seed)``.
    """
    n_epochs = config.epochs if epochs is None else epochs
    data = encode(corpus, model.feature_config)
    val = encode(valid, model.feature_config) if valid is not None else None
    if n_epochs == 0:
        return TrainResult(model, [])
    if len(data) == 0:
        raise ValueError("cannot train on an empty corpus")

    rng = np.random.default_rng(config.seed)
    w = model.weights.copy()
    b = model.intercept
    lam = config.l2_strength
    B = config.batch_size
    n = len(data)
    history: list[EpochRecord] = []
    step = 0
    lr = config.learning_rate
    for ep in range(n_epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, B):
            idx = order[start : start + B]
            loss, gw, gb = _loss_grad(data.X[idx], data.y[idx], w, b, lam)
            if not math.isfinite(loss):
                raise TrainingDiverged(step, loss, epoch_offset + ep + 1)
            lr = schedule(step) if schedule is not None else config.learning_rate
            w -= lr * gw
            b -= lr * gb
            losses.append(loss)
            step += 1
        if not (np.all(np.isfinite(w)) and math.isfinite(b)):
            raise TrainingDiverged(step - 1, float("nan"), epoch_offset + ep + 1)
        snapshot = LinearClassifier(w.copy(), b, model.feature_config)
        history.append(
            EpochRecord(
                epoch=epoch_offset + ep + 1,
                cycle=cycle,
                lr=float(lr),
                train_loss=float(np.mean(losses)),
                train_acc=accuracy(snapshot, data),
                val_acc=accuracy(snapshot, val) if val is not None else float("nan"),
            )
        )
    meta = {
        "seed": config.seed,
        "epochs": n_epochs,
        "final_lr": float(lr),
        "history": [record_to_dict(r) for r in history],
    }
    return TrainResult(LinearClassifier(w, b, model.feature_config, meta), history)


def record_to_dict(rec: EpochRecord) -> dict:
    """JSON-safe dict; a missing validation accuracy becomes ``None``."""
    d = asdict(rec)
    if isinstance(d["val_acc"], float) and math.isnan(d["val_acc"]):
        d["val_acc"] = None
    return d


def _to_json(model: LinearClassifier) -> str:
    nz = np.flatnonzero(model.weights)
    doc = {
        "format_version": FORMAT_VERSION,
        "feature_config": model.feature_config.to_dict(),
        "weights": {str(int(i)): float(model.weights[i]) for i in nz},
        "intercept": model.intercept,
        "train_meta": model.train_meta,
    }
    return json.dumps(doc, allow_nan=False)


def save(model: LinearClassifier, path: str | Path) -> Path:
    """Write the model JSON atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    text = _to_json(model)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load(path: str | Path) -> LinearClassifier:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: corrupted model file ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: corrupted model file (not a JSON object)")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {version!r} (expected {FORMAT_VERSION})"
        )
    try:
        fc = FeatureConfig.from_dict(doc["feature_config"])
        weights = np.zeros(fc.hash_dimension)
        for k, v in doc["weights"].items():
            i = int(k)
            if not 0 <= i < fc.hash_dimension:
                raise ModelFormatError(
                    f"{path}: weight index {i} outside hash dimension {fc.hash_dimension}"
                )
            weights[i] = float(v)
        return LinearClassifier(weights, float(doc["intercept"]), fc, doc.get("train_meta", {}))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"{path}: corrupted model file ({exc})") from exc

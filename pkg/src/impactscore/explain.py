"""Per-word impact scores from a local linear surrogate.

For one sentence we sample masks over its token positions, query the
black-box classifier on each masked sentence (masked tokens are deleted),
and fit a kernel-weighted ridge regression of the black box's *logit* on
the mask bits. The fitted intercept is the ``<BIAS>`` row and the
coefficients are the per-token contributions. Because the target is the
logit, the reported probability is exactly ``sigmoid(sum + bias)``.

Contributions are reported in the frame of the predicted class: for a
``neg`` (hateful) prediction the signs are flipped so that evidence for
hate is positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logit

from .corpus import Document, make_document

CLASSES = ("pos", "neg")

_GREEN = "\x1b[32m"
_RED = "\x1b[31m"
_RESET = "\x1b[0m"


class SurrogateError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ExplainConfig:
    n_samples: int = 1000
    ridge_lambda: float = 1e-3
    kernel_width: float = 0.25
    seed: int = 0
    proba_clamp: float = 1e-6

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        if not self.kernel_width > 0:
            raise ValueError("kernel_width must be positive")
        if not 0 < self.proba_clamp < 0.5:
            raise ValueError("proba_clamp must be in (0, 0.5)")


@dataclass(frozen=True)
class Contribution:
    token: str
    position: int
    contribution: float


@dataclass(frozen=True)
class Explanation:
    target_class: str
    probability: float
    score: float
    contributions: tuple[Contribution, ...]
    bias: float
    highlighted_sum: float

    @classmethod
    def from_decomposition(
        cls, target_class: str, contributions: Sequence[Contribution], bias: float
    ) -> "Explanation":
        """Build an explanation from frame-relative contributions and bias.

        ``score`` follows the pos-logit convention, so a ``neg`` explanation
        reports ``-(sum + bias)``.
        """
        if target_class not in CLASSES:
            raise ValueError(f"target_class must be one of {CLASSES}, got {target_class!r}")
        contributions = tuple(contributions)
        total = math.fsum(c.contribution for c in contributions)
        z = total + bias
        return cls(
            target_class=target_class,
            probability=float(expit(z)),
            score=z if target_class == "pos" else -z,
            contributions=contributions,
            bias=float(bias),
            highlighted_sum=total,
        )

    def ranked(self) -> list[Contribution]:
        """Contributions sorted from strongest support to strongest opposition."""
        return sorted(self.contributions, key=lambda c: (-c.contribution, c.position))

    def to_dict(self) -> dict:
        return {
            "target_class": self.target_class,
            "probability": self.probability,
            "score": self.score,
            "bias": self.bias,
            "highlighted_sum": self.highlighted_sum,
            "tokens": [
                {"token": c.token, "position": c.position, "contribution": c.contribution}
                for c in self.contributions
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Explanation":
        return cls(
            target_class=d["target_class"],
            probability=float(d["probability"]),
            score=float(d["score"]),
            contributions=tuple(
                Contribution(t["token"], int(t["position"]), float(t["contribution"]))
                for t in d["tokens"]
            ),
            bias=float(d["bias"]),
            highlighted_sum=float(d["highlighted_sum"]),
        )


def sample_perturbations(tokens: Sequence[str], n_samples: int, seed: int) -> np.ndarray:
    """Boolean keep-masks of shape ``(n_samples, len(tokens))``.

    Row 0 keeps everything; other rows keep each position with probability
    1/2, redrawn until at least one position is kept.
    """
    T = len(tokens)
    if T == 0:
        raise ValueError("cannot perturb an empty token list")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    masks = rng.random((n_samples, T)) < 0.5
    masks[0] = True
    empty = ~masks.any(axis=1)
    while empty.any():
        masks[empty] = rng.random((int(empty.sum()), T)) < 0.5
        empty = ~masks.any(axis=1)
    return masks


def kernel_weights(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    """exp(-d^2 / width^2) with d the fraction of masked positions."""
    d = 1.0 - masks.mean(axis=1)
    return np.exp(-(d**2) / kernel_width**2)


def fit_surrogate(
    masks: np.ndarray,
    black_box_probas: Sequence[float],
    config: ExplainConfig,
    sample_weights: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Weighted ridge fit of logit(p) on the mask bits; returns (coefficients, intercept).

    Sample weights (kernel weights unless given) are rescaled to mean one,
    so ``ridge_lambda`` is measured per unit of average sample weight and a
    uniform rescaling of the weights leaves the fit unchanged. The intercept
    is not penalized.
    """
    S = np.asarray(masks, dtype=np.float64)
    n, T = S.shape
    p = np.asarray(black_box_probas, dtype=np.float64)
    if p.shape != (n,):
        raise ValueError(f"expected {n} probabilities, got shape {p.shape}")
    eps = config.proba_clamp
    y = logit(np.clip(p, eps, 1.0 - eps))
    w = kernel_weights(masks, config.kernel_width) if sample_weights is None else np.asarray(sample_weights, float)
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("sample weights must be non-negative with a positive sum")
    w = w / w.mean()

    Z = np.hstack([S, np.ones((n, 1))])
    A = Z.T @ (w[:, None] * Z)
    A[np.arange(T), np.arange(T)] += config.ridge_lambda
    rhs = Z.T @ (w * y)
    if np.linalg.cond(A) > 1e12:
        raise SurrogateError(
            f"surrogate normal equations are singular (cond={np.linalg.cond(A):.3g}); "
            "increase n_samples or ridge_lambda"
        )
    theta = np.linalg.solve(A, rhs)
    return theta[:T], float(theta[T])


def _masked_text(tokens: Sequence[str], keep: np.ndarray) -> str:
    return " ".join(t for t, k in zip(tokens, keep) if k)


def explain(
    doc: Document | str,
    predictor: Callable[[list[str]], Sequence[float]],
    config: ExplainConfig | None = None,
    target_class: str | None = None,
) -> Explanation:
    """Explain ``predictor``'s output on one document.

    ``predictor`` maps a list of texts to P(pos) per text (a two-column
    ``[P(neg), P(pos)]`` array is also accepted). The target class defaults
    to whichever class the predictor favours on the full sentence, with
    ties going to ``pos``.
    """
    config = config or ExplainConfig()
    if isinstance(doc, str):
        doc = make_document("", doc)
    tokens = list(doc.tokens)
    T = len(tokens)
    if T == 0:
        raise ValueError("document has no tokens to explain")
    if config.n_samples < T + 1:
        raise ValueError(f"n_samples={config.n_samples} must be at least {T + 1} for {T} tokens")
    if target_class is not None and target_class not in CLASSES:
        raise ValueError(f"target_class must be one of {CLASSES}")

    masks = sample_perturbations(tokens, config.n_samples, config.seed)
    texts = [_masked_text(tokens, row) for row in masks]
    probas = np.asarray(predictor(texts), dtype=np.float64)
    if probas.ndim == 2 and probas.shape[1] == 2:
        probas = probas[:, 1]
    if probas.shape != (len(texts),):
        raise ValueError(f"predictor returned shape {probas.shape} for {len(texts)} texts")

    if target_class is None:
        target_class = "pos" if probas[0] >= 0.5 else "neg"
    coef, intercept = fit_surrogate(masks, probas, config)
    sign = 1.0 if target_class == "pos" else -1.0
    contribs = [Contribution(tok, i, sign * float(c)) for i, (tok, c) in enumerate(zip(tokens, coef))]
    return Explanation.from_decomposition(target_class, contribs, sign * intercept)


def render(explanation: Explanation, format: str = "text", color: bool = False) -> str:
    """Text table in the "Contribution? / Feature" layout, or lossless JSON."""
    if format == "json":
        return json.dumps(explanation.to_dict(), ensure_ascii=False)
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    e = explanation
    lines = [
        f"y={e.target_class} (probability {e.probability:.3f}, score {e.score:.3f}) top features",
        "",
        f"{'Contribution?':>13}  Feature",
        f"{e.highlighted_sum:>+13.3f}  Highlighted in text (sum)",
        f"{e.bias:>+13.3f}  <BIAS>",
        "",
    ]
    peak = max((abs(c.contribution) for c in e.contributions), default=0.0)
    words = []
    for c in e.contributions:
        if color and peak > 0 and abs(c.contribution) >= 0.5 * peak:
            words.append(f"{_GREEN if c.contribution > 0 else _RED}{c.token}{_RESET}")
        else:
            words.append(c.token)
    lines.append(" ".join(words))
    lines.append("")
    lines.append(
        "impact scores: " + ", ".join(f"{c.token} {c.contribution:+.3f}" for c in e.contributions)
    )
    return "\n".join(lines)


def parse_json(text: str) -> Explanation:
    return Explanation.from_dict(json.loads(text))

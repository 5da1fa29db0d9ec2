"""Learning-rate schedules, an LR range test, and multi-cycle training.

Two preset plans are provided because the source training recipe describes
two different ones: plan A repeats a 25-epoch one-cycle run three times at
1e-5, plan B runs five 8-epoch SGDR cycles at 1e-6. Between cycles only the
checkpoint with the best validation score so far is carried forward.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .corpus import LabeledCorpus
from .metrics import emit_curves
from .model import (
    EncodedCorpus,
    EpochRecord,
    LinearClassifier,
    TrainConfig,
    _loss_grad,
    accuracy,
    encode,
    load,
    record_to_dict,
    save,
    steps_per_epoch,
    train,
)

FINDER_SMOOTHING = 0.98
FINDER_DIVERGENCE = 4.0


@dataclass(frozen=True)
class OneCycleConfig:
    lr_max: float
    total_steps: int
    pct_up: float = 0.5
    div_factor: float = 25.0
    final_div: float = 1e4

    def __post_init__(self):
        if not self.lr_max > 0:
            raise ValueError("lr_max must be positive")
        if self.total_steps < 2:
            raise ValueError(f"total_steps must be >= 2, got {self.total_steps}")
        if not 0 < self.pct_up < 1:
            raise ValueError("pct_up must be in (0, 1)")
        if not (self.div_factor > 1 and self.final_div > 1):
            raise ValueError("div_factor and final_div must exceed 1")

    @property
    def peak_step(self) -> int:
        # kept off both endpoints so start, peak and end are distinct steps
        peak = math.floor(self.pct_up * self.total_steps)
        return min(max(peak, 1), self.total_steps - 2) if self.total_steps > 2 else 1


def one_cycle_lr(config: OneCycleConfig, step: int) -> float:
    """Triangular one-cycle: linear warm-up to ``lr_max`` then linear anneal."""
    T = config.total_steps
    if not 0 <= step < T:
        raise ValueError(f"step {step} outside [0, {T})")
    lo = config.lr_max / config.div_factor
    end = config.lr_max / config.final_div
    peak = config.peak_step
    if T == 2:
        return lo if step == 0 else end
    # anchors returned exactly; min() guards the ramps against rounding past the peak
    if step == peak:
        return config.lr_max
    if step == T - 1:
        return end
    if step < peak:
        return min(lo + (config.lr_max - lo) * step / peak, config.lr_max)
    return min(config.lr_max + (end - config.lr_max) * (step - peak) / (T - 1 - peak), config.lr_max)


@dataclass(frozen=True)
class SgdrConfig:
    lr_max: float
    lr_min: float = 0.0
    cycle_epochs: int = 8
    n_cycles: int = 5

    def __post_init__(self):
        if not self.lr_max > 0:
            raise ValueError("lr_max must be positive")
        if not 0 <= self.lr_min < self.lr_max:
            raise ValueError("need 0 <= lr_min < lr_max")
        if self.cycle_epochs < 1 or self.n_cycles < 1:
            raise ValueError("cycle_epochs and n_cycles must be >= 1")


def sgdr_lr(config: SgdrConfig, epoch_in_cycle: float) -> float:
    """Cosine decay from ``lr_max`` to ``lr_min`` over one cycle."""
    if not 0 <= epoch_in_cycle <= config.cycle_epochs:
        raise ValueError(f"epoch_in_cycle {epoch_in_cycle} outside [0, {config.cycle_epochs}]")
    frac = epoch_in_cycle / config.cycle_epochs
    return config.lr_min + 0.5 * (config.lr_max - config.lr_min) * (1 + math.cos(math.pi * frac))


def sgdr_schedule(config: SgdrConfig, steps_per_epoch: int) -> Callable[[int], float]:
    """Per-step SGDR over all ``n_cycles`` with a restart at every cycle boundary."""
    cycle_steps = config.cycle_epochs * steps_per_epoch

    def lr_at(step: int) -> float:
        return sgdr_lr(config, (step % cycle_steps) / steps_per_epoch)

    return lr_at


@dataclass(frozen=True)
class Cycle:
    """One training run of ``epochs`` epochs under a single schedule shape.

    ``kind`` is ``"one_cycle"``, ``"sgdr"`` or ``"constant"``.
    """

    kind: str
    epochs: int
    lr_max: float
    lr_min: float = 0.0
    pct_up: float = 0.5
    div_factor: float = 25.0
    final_div: float = 1e4

    def __post_init__(self):
        if self.kind not in ("one_cycle", "sgdr", "constant"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.epochs < 1:
            raise ValueError("a cycle needs at least one epoch")

    def schedule(self, steps_per_epoch: int) -> Callable[[int], float]:
        if self.kind == "constant":
            return lambda step: self.lr_max
        if self.kind == "sgdr":
            cfg = SgdrConfig(self.lr_max, self.lr_min, self.epochs, 1)
            return sgdr_schedule(cfg, steps_per_epoch)
        total = self.epochs * steps_per_epoch
        if total < 2:
            return lambda step: self.lr_max
        cfg = OneCycleConfig(self.lr_max, total, self.pct_up, self.div_factor, self.final_div)
        return lambda step: one_cycle_lr(cfg, step)


@dataclass(frozen=True)
class CyclePlan:
    cycles: tuple[Cycle, ...]
    retention: str = "keep-best-by-validation-accuracy"

    def __post_init__(self):
        object.__setattr__(self, "cycles", tuple(self.cycles))
        if not self.cycles:
            raise ValueError("a plan needs at least one cycle")
        if self.retention != "keep-best-by-validation-accuracy":
            raise ValueError(f"unsupported retention rule {self.retention!r}")

    @property
    def total_epochs(self) -> int:
        return sum(c.epochs for c in self.cycles)


def sgdr_plan(config: SgdrConfig) -> CyclePlan:
    return CyclePlan(
        tuple(Cycle("sgdr", config.cycle_epochs, config.lr_max, config.lr_min) for _ in range(config.n_cycles))
    )


def plan_a(lr_max: float = 1e-5) -> CyclePlan:
    """Three consecutive 25-epoch one-cycle runs."""
    return CyclePlan(tuple(Cycle("one_cycle", 25, lr_max) for _ in range(3)))


def plan_b(lr_max: float = 1e-6) -> CyclePlan:
    """Five 8-epoch SGDR cycles."""
    return sgdr_plan(SgdrConfig(lr_max=lr_max, lr_min=0.0, cycle_epochs=8, n_cycles=5))


PRESETS = {"A": plan_a, "B": plan_b}


@dataclass
class FinderResult:
    lrs: np.ndarray
    losses: np.ndarray
    raw_losses: np.ndarray
    suggestion: float
    diverged: bool


def geometric_lrs(lr_lo: float, lr_hi: float, steps: int) -> np.ndarray:
    k = np.arange(steps)
    return lr_lo * (lr_hi / lr_lo) ** (k / (steps - 1))


def lr_range_test(
    step_fn: Callable[[float], float],
    lr_lo: float,
    lr_hi: float,
    steps: int,
    smoothing: float = FINDER_SMOOTHING,
    divergence: float = FINDER_DIVERGENCE,
) -> FinderResult:
    """Scan geometrically increasing rates through ``step_fn(lr) -> loss``.

    ``step_fn`` takes one optimisation step at the given rate and returns the
    loss measured before the update. Losses are exponentially smoothed with
    bias correction; the scan stops once the smoothed loss passes
    ``divergence`` times its running minimum or the raw loss is non-finite.
    The suggestion is the rate where the smoothed loss falls fastest per
    unit of log learning rate.
    """
    if not 0 < lr_lo < lr_hi:
        raise ValueError(f"need 0 < lr_lo < lr_hi, got {lr_lo}, {lr_hi}")
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    schedule = geometric_lrs(lr_lo, lr_hi, steps)
    lrs, smooth, raw = [], [], []
    avg, best = 0.0, math.inf
    diverged = False
    for k, lr in enumerate(schedule):
        loss = step_fn(float(lr))
        if not math.isfinite(loss):
            if k == 0:
                raise FloatingPointError(f"non-finite loss {loss} at the first step (lr={lr})")
            diverged = True
            break
        avg = smoothing * avg + (1 - smoothing) * loss
        s = avg / (1 - smoothing ** (k + 1))
        lrs.append(float(lr))
        smooth.append(s)
        raw.append(loss)
        best = min(best, s)
        if s > divergence * best:
            diverged = True
            break
    lrs_a, sm_a = np.array(lrs), np.array(smooth)
    if len(lrs_a) < 2:
        suggestion = float(lrs_a[0])
    else:
        slopes = np.gradient(sm_a, np.log(lrs_a))
        suggestion = float(lrs_a[int(np.argmin(slopes))])
    return FinderResult(lrs_a, sm_a, np.array(raw), suggestion, diverged)


def find_lr(
    model: LinearClassifier,
    corpus: LabeledCorpus | EncodedCorpus,
    lr_lo: float = 1e-7,
    lr_hi: float = 1e-1,
    steps: int = 100,
    config: TrainConfig | None = None,
) -> FinderResult:
    """LR range test on a throwaway copy of ``model``; the model itself is untouched."""
    config = config or TrainConfig()
    data = encode(corpus, model.feature_config)
    if len(data) == 0:
        raise ValueError("cannot scan learning rates on an empty corpus")
    rng = np.random.default_rng(config.seed)
    w = model.weights.copy()
    state = {"b": model.intercept, "order": rng.permutation(len(data)), "pos": 0}

    def step_fn(lr: float) -> float:
        if state["pos"] >= len(data):
            state["order"] = rng.permutation(len(data))
            state["pos"] = 0
        idx = state["order"][state["pos"] : state["pos"] + config.batch_size]
        state["pos"] += config.batch_size
        loss, gw, gb = _loss_grad(data.X[idx], data.y[idx], w, state["b"], config.l2_strength)
        w[:] -= lr * gw
        state["b"] -= lr * gb
        return loss

    with np.errstate(over="ignore", invalid="ignore"):
        return lr_range_test(step_fn, lr_lo, lr_hi, steps)


class CheckpointError(OSError):
    def __init__(self, message: str, last_good: Path | None):
        self.last_good = last_good
        super().__init__(f"{message}; last good checkpoint: {last_good}")


@dataclass
class CycleRunResult:
    model: LinearClassifier
    history: list[EpochRecord]
    checkpoints: list[Path]
    scores: list[float]
    best_cycle: int
    best_checkpoint: Path
    _tmpdir: object = field(default=None, repr=False)


def run_cycles(
    model: LinearClassifier,
    train_corpus: LabeledCorpus | EncodedCorpus,
    valid_corpus: LabeledCorpus | EncodedCorpus,
    plan: CyclePlan,
    config: TrainConfig,
    checkpoint_dir: str | Path | None = None,
    scorer: Callable[[LinearClassifier], float] | None = None,
) -> CycleRunResult:
    """Train cycle by cycle, checkpointing after each and resuming from the best.

    Cycle ``k`` (0-based) trains with seed ``config.seed + k``. After it, the
    model is written to ``cycle_XX.json`` with a ``cycle_XX.history.csv``
    sidecar holding every epoch so far. ``scorer`` defaults to validation
    accuracy; ties keep the earlier checkpoint. The returned model is the
    best checkpoint as read back from disk.
    """
    tmp = None
    if checkpoint_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="impactscore-ckpt-")
        checkpoint_dir = tmp.name
    ckpt_dir = Path(checkpoint_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)

    fc = model.feature_config
    data = encode(train_corpus, fc)
    val = encode(valid_corpus, fc)
    if len(val) == 0:
        raise ValueError("run_cycles needs a non-empty validation split")
    score_fn = scorer or (lambda m: accuracy(m, val))
    spe = steps_per_epoch(len(data), config.batch_size)

    current = model
    history: list[EpochRecord] = []
    checkpoints: list[Path] = []
    scores: list[float] = []
    best_score, best_path, best_cycle = -math.inf, None, 0
    for k, cyc in enumerate(plan.cycles):
        res = train(
            current,
            data,
            replace(config, seed=config.seed + k),
            schedule=cyc.schedule(spe),
            valid=val,
            epochs=cyc.epochs,
            cycle=k + 1,
            epoch_offset=len(history),
        )
        history.extend(res.history)
        score = float(score_fn(res.model))
        meta = {
            "seed": config.seed,
            "epochs": len(history),
            "final_lr": res.model.train_meta.get("final_lr"),
            "cycle": k + 1,
            "val_score": score,
            "history": [record_to_dict(r) for r in history],
        }
        ckpt = LinearClassifier(res.model.weights, res.model.intercept, fc, meta)
        path = ckpt_dir / f"cycle_{k + 1:02d}.json"
        try:
            save(ckpt, path)
            emit_curves(history, ckpt_dir / f"cycle_{k + 1:02d}.history.csv")
        except OSError as exc:
            raise CheckpointError(f"could not write checkpoint {path}: {exc}", best_path) from exc
        checkpoints.append(path)
        scores.append(score)
        if score > best_score:
            best_score, best_path, best_cycle = score, path, k + 1
        current = load(best_path)

    return CycleRunResult(current, history, checkpoints, scores, best_cycle, best_path, tmp)


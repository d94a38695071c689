"""Split protocols, the Adam training loop, and evaluation orchestration.

Splits operate on trials: every window of a trial inherits its fold, which
is the only leakage-safe protocol when windows of one recording are nearly
identical. Training is mini-batch Adam on softmax cross-entropy with early
stopping on validation loss; with fixed seeds and single-threaded math two
runs produce bit-identical parameters and histories.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data.records import Dataset, SCORE_NAMES
from .model.config import ModelConfig, derive_shapes
from .model.network import forward, loss_and_grad
from .model.params import ModelParams, build, is_learnable
from .model.layers import softmax_cross_entropy
from .preprocess import PreprocessConfig, WindowBatch, build_windows

SPLIT_MODES = ("kfold", "tvt")


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "tvt"
    k: int = 5
    tvt_fractions: tuple[float, float, float] = (0.64, 0.16, 0.20)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in SPLIT_MODES:
            raise ValueError(f"mode must be one of {SPLIT_MODES}")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if abs(sum(self.tvt_fractions) - 1.0) > 1e-9:
            raise ValueError("tvt fractions must sum to 1")


@dataclass(frozen=True)
class TrainConfig:
    target: str = "valence"
    epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    early_stop_patience: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.target not in SCORE_NAMES:
            raise ValueError(f"target must be one of {SCORE_NAMES}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0 or self.adam_epsilon <= 0:
            raise ValueError("learning_rate must be >= 0 and adam_epsilon > 0")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


@dataclass
class RunHistory:
    """Per-epoch curves; wall-clock seconds stay out of the persisted table
    so reports remain byte-reproducible."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def n_epochs(self) -> int:
        return len(self.train_loss)


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite, naming the epoch and batch."""


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_kfold(dataset: Dataset, spec: SplitSpec) -> list[np.ndarray]:
    """Seeded shuffle of trial indices, then a contiguous partition into k
    folds whose sizes differ by at most one."""
    n = dataset.n_trials
    if n < spec.k:
        raise ValueError(f"need at least {spec.k} trials for {spec.k}-fold CV, got {n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    return [fold.copy() for fold in np.array_split(perm, spec.k)]


def split_tvt(dataset: Dataset, spec: SplitSpec):
    """Seeded shuffle; first test fraction, then validation, rest training.

    Boundaries round half-up on the cumulative fractions, so 10 trials under
    64:16:20 come out 6/2/2.
    """
    n = dataset.n_trials
    if n < 5:
        raise ValueError(f"need at least 5 trials for a tvt split, got {n}")
    f_train, f_val, f_test = spec.tvt_fractions
    perm = np.random.default_rng(spec.seed).permutation(n)
    b_test = _round_half_up(f_test * n)
    b_val = _round_half_up((f_test + f_val) * n)
    test = perm[:b_test].copy()
    val = perm[b_test:b_val].copy()
    train = perm[b_val:].copy()
    return train, val, test


def window_trial_indices(batch: WindowBatch, dataset: Dataset) -> np.ndarray:
    """Map each window row to the ordinal of its source trial."""
    lookup = {(t.subject_id, t.clip_id): i for i, t in enumerate(dataset.trials)}
    return np.asarray([lookup[(s, c)] for s, c, _ in batch.provenance], dtype=np.int64)


def _rows_for(batch: WindowBatch, dataset: Dataset, trial_idx: np.ndarray) -> np.ndarray:
    members = np.zeros(dataset.n_trials, dtype=bool)
    members[trial_idx] = True
    return np.nonzero(members[window_trial_indices(batch, dataset)])[0]


def _adam_step(params, grads, state, cfg: TrainConfig):
    state["t"] += 1
    t = state["t"]
    correct1 = 1.0 - cfg.adam_beta1**t
    correct2 = 1.0 - cfg.adam_beta2**t
    new_params = dict(params)
    for name, grad in grads.items():
        m = state["m"][name] = cfg.adam_beta1 * state["m"][name] + (1 - cfg.adam_beta1) * grad
        v = state["v"][name] = cfg.adam_beta2 * state["v"][name] + (1 - cfg.adam_beta2) * grad**2
        step = cfg.learning_rate * (m / correct1) / (np.sqrt(v / correct2) + cfg.adam_epsilon)
        new_params[name] = params[name] - step
    return new_params


def _inference_pass(params, model_cfg, shapes, x, labels, batch_size: int = 256):
    """Loss, accuracy and positive-class probabilities in inference mode."""
    losses = []
    probs = []
    for start in range(0, x.shape[0], batch_size):
        chunk = slice(start, start + batch_size)
        logits, _ = forward(params, model_cfg, x[chunk], training=False, shapes=shapes)
        loss, _, p = softmax_cross_entropy(logits, labels[chunk].astype(np.int64))
        losses.append(loss * logits.shape[0])
        probs.append(p[:, 1])
    probs = np.concatenate(probs)
    total_loss = float(np.sum(losses) / x.shape[0])
    preds = (probs >= 0.5).astype(np.int64)
    accuracy = float(np.mean(preds == labels))
    return total_loss, accuracy, probs


def train(
    dataset: Dataset,
    split: tuple[np.ndarray, np.ndarray],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    pre_cfg: PreprocessConfig | None = None,
) -> tuple[ModelParams, RunHistory]:
    """Run the optimization loop and return the best-epoch parameters.

    ``split`` is (train_trial_indices, val_trial_indices). After each epoch
    the validation loss decides whether the current parameters become the
    reported checkpoint; training stops once ``early_stop_patience`` epochs
    pass without improvement.
    """
    pre_cfg = pre_cfg or PreprocessConfig()
    train_idx, val_idx = split
    if len(train_idx) == 0:
        raise ValueError("empty training split")
    if len(val_idx) == 0:
        raise ValueError("empty validation split")
    batch = build_windows(dataset, pre_cfg)
    y = batch.labels(train_cfg.target).astype(np.int64)
    train_rows = _rows_for(batch, dataset, np.asarray(train_idx))
    val_rows = _rows_for(batch, dataset, np.asarray(val_idx))
    if train_rows.size == 0:
        raise ValueError("training split produced no windows")
    x_train, y_train = batch.x[train_rows], y[train_rows]
    x_val, y_val = batch.x[val_rows], y[val_rows]

    shapes = derive_shapes(model_cfg)
    params, _ = build(model_cfg, train_cfg.seed)
    adam_state = {
        "t": 0,
        "m": {n: np.zeros_like(v) for n, v in params.items() if is_learnable(n)},
        "v": {n: np.zeros_like(v) for n, v in params.items() if is_learnable(n)},
    }
    loop_rng = np.random.default_rng(train_cfg.seed + 1)

    history = RunHistory()
    best_params = {n: v.copy() for n, v in params.items()}
    best_loss = math.inf
    epochs_since_best = 0
    for epoch in range(train_cfg.epochs):
        started = time.perf_counter()
        perm = loop_rng.permutation(train_rows.size)
        epoch_loss = 0.0
        for b, start in enumerate(range(0, perm.size, train_cfg.batch_size)):
            rows = perm[start : start + train_cfg.batch_size]
            dropout_seed = int(loop_rng.integers(0, 2**31))
            loss, grads, bn_updates = loss_and_grad(
                params, model_cfg, x_train[rows], y_train[rows],
                dropout_seed=dropout_seed, shapes=shapes,
            )
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {b}"
                )
            params = _adam_step(params, grads, adam_state, train_cfg)
            params.update(bn_updates)
            epoch_loss += loss * rows.size
        history.train_loss.append(epoch_loss / perm.size)

        val_loss, val_acc, _ = _inference_pass(params, model_cfg, shapes, x_val, y_val)
        history.val_loss.append(val_loss)
        history.val_acc.append(val_acc)
        history.epoch_seconds.append(time.perf_counter() - started)

        if val_loss < best_loss:
            best_loss = val_loss
            history.best_epoch = epoch
            best_params = {n: v.copy() for n, v in params.items()}
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= train_cfg.early_stop_patience:
                break
    return best_params, history


def evaluate(
    params: ModelParams,
    model_cfg: ModelConfig,
    dataset: Dataset,
    trial_idx,
    target: str,
    pre_cfg: PreprocessConfig | None = None,
):
    """Inference over every window of the given trials.

    Returns (scores, labels, provenance): positive-class probabilities, the
    binary labels, and the (subject, clip, window) identity per row, in
    deterministic trial-order x offset order.
    """
    pre_cfg = pre_cfg or PreprocessConfig()
    if target not in SCORE_NAMES:
        raise ValueError(f"target must be one of {SCORE_NAMES}")
    batch = build_windows(dataset, pre_cfg)
    rows = _rows_for(batch, dataset, np.asarray(trial_idx))
    shapes = derive_shapes(model_cfg)
    labels = batch.labels(target).astype(np.int64)[rows]
    _, _, probs = _inference_pass(
        params, model_cfg, shapes, batch.x[rows], labels
    )
    provenance = tuple(batch.provenance[r] for r in rows)
    return probs, labels, provenance


def run_cv(
    dataset: Dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    spec: SplitSpec,
    pre_cfg: PreprocessConfig | None = None,
):
    """k-fold cross-validation: train on k-1 folds (carving 20% of those
    trials as a seeded validation set), test on the held-out fold.

    Returns (per-fold MetricSet list, mean MetricSet). Fold seeds derive as
    base seed + fold index so folds are independent and reproducible.
    """
    from dataclasses import replace

    from .metrics import mean_metric_set, metric_set

    folds = split_kfold(dataset, spec)
    fold_metrics = []
    for i, test_idx in enumerate(folds):
        rest = np.concatenate([f for j, f in enumerate(folds) if j != i])
        carve = np.random.default_rng(spec.seed + i).permutation(rest)
        n_val = max(1, _round_half_up(0.2 * rest.size))
        val_idx, train_idx = carve[:n_val], carve[n_val:]
        fold_cfg = replace(train_cfg, seed=train_cfg.seed + i)
        params, _ = train(dataset, (train_idx, val_idx), model_cfg, fold_cfg, pre_cfg)
        scores, labels, _ = evaluate(
            params, model_cfg, dataset, test_idx, train_cfg.target, pre_cfg
        )
        fold_metrics.append(metric_set(scores, labels))
    return fold_metrics, mean_metric_set(fold_metrics)

"""Signal preprocessing: baseline removal, per-window z-scoring, channel
ordering, windowing, and label binarization.

The chain per trial is: build a baseline template, slice the stimulus into
windows, subtract the template from each window, z-score each channel within
the window, reorder rows to the canonical anti-clockwise layout (identity
for the native 14-channel order), and prepend a singleton feature dimension.
All functions are pure; ``build_windows`` is deterministic given its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.layout import ChannelLayout
from .data.records import Dataset, Trial

BASELINE_MODES = ("template", "scalar")


@dataclass(frozen=True)
class PreprocessConfig:
    """Windowing and normalization settings.

    ``window_samples`` defaults to one second at 128 Hz; the stride equals
    the window (no overlap) unless configured otherwise. ``baseline_mode``
    "template" subtracts the mean baseline window elementwise; "scalar"
    subtracts each channel's overall baseline mean (ablation switch).
    """

    window_samples: int = 128
    window_stride: int = 128
    binarize_threshold: int = 3
    zscore_epsilon: float = 1e-8
    baseline_mode: str = "template"

    def __post_init__(self) -> None:
        if self.window_samples < 1:
            raise ValueError("window_samples must be >= 1")
        if self.window_stride < 1:
            raise ValueError("window_stride must be >= 1")
        if not 1 <= self.binarize_threshold <= 5:
            raise ValueError("binarize_threshold must be in 1..5")
        if self.zscore_epsilon <= 0:
            raise ValueError("zscore_epsilon must be positive")
        if self.baseline_mode not in BASELINE_MODES:
            raise ValueError(f"baseline_mode must be one of {BASELINE_MODES}")


@dataclass(frozen=True)
class WindowBatch:
    """Preprocessed model inputs.

    ``x`` is [n, 1, channels, window_samples] float64; the singleton axis is
    the feature dimension the 2-D convolutions expect. Labels are one binary
    vector per rating target; ``provenance`` records (subject_id, clip_id,
    window_index) per row and must be unique.
    """

    x: np.ndarray
    y_valence: np.ndarray
    y_arousal: np.ndarray
    y_dominance: np.ndarray
    provenance: tuple[tuple[str, int, int], ...]

    def __post_init__(self) -> None:
        n = self.x.shape[0]
        if self.x.ndim != 4 or self.x.shape[1] != 1:
            raise ValueError(f"x must be [n, 1, channels, samples], got {self.x.shape}")
        if not np.isfinite(self.x).all():
            raise ValueError("window batch contains non-finite values")
        for name in ("y_valence", "y_arousal", "y_dominance"):
            y = getattr(self, name)
            if y.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            if not np.isin(y, (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        if len(self.provenance) != n or len(set(self.provenance)) != n:
            raise ValueError("provenance must be unique per row")

    def __len__(self) -> int:
        return self.x.shape[0]

    def labels(self, target: str) -> np.ndarray:
        return getattr(self, f"y_{target}")


def baseline_template(trial: Trial, window_samples: int) -> np.ndarray:
    """Elementwise mean of all complete non-overlapping baseline windows."""
    baseline = trial.baseline.astype(np.float64)
    n = baseline.shape[1]
    count = n // window_samples
    if count == 0:
        raise ValueError(
            f"trial {trial.subject_id}/{trial.clip_id}: baseline has {n} samples, "
            f"shorter than one {window_samples}-sample window"
        )
    used = baseline[:, : count * window_samples]
    return used.reshape(baseline.shape[0], count, window_samples).mean(axis=1)


def baseline_remove(stimulus_window: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Elementwise stimulus minus template."""
    if stimulus_window.shape != template.shape:
        raise ValueError(
            f"shape mismatch: window {stimulus_window.shape} vs template {template.shape}"
        )
    return np.asarray(stimulus_window, dtype=np.float64) - np.asarray(template, dtype=np.float64)


def zscore(window: np.ndarray, epsilon: float = 1e-8) -> np.ndarray:
    """Per-channel z-score over the window: (x - mean) / max(std, epsilon).

    Uses the population standard deviation; a flat channel comes out as all
    zeros because the epsilon clamp guards the zero-variance case.
    """
    w = np.asarray(window, dtype=np.float64)
    mu = w.mean(axis=1, keepdims=True)
    sigma = w.std(axis=1, keepdims=True)
    return (w - mu) / np.maximum(sigma, epsilon)


def order_channels(
    layout: ChannelLayout, x: np.ndarray, current_names=None
) -> np.ndarray:
    """Permute rows into the layout's canonical anti-clockwise order.

    ``current_names`` gives the electrode name of each input row; when omitted
    the rows are taken to be in layout order already and pass through
    unchanged (the native 14-channel order is itself anti-clockwise, so this
    is the common path).
    """
    if x.shape[0] != layout.n_channels:
        raise ValueError(f"expected {layout.n_channels} rows, got {x.shape[0]}")
    if current_names is None:
        return x
    current_names = [str(n) for n in current_names]
    if len(current_names) != layout.n_channels:
        raise ValueError("current_names length must match the layout")
    positions = {name: i for i, name in enumerate(current_names)}
    try:
        perm = [positions[name] for name in layout.names]
    except KeyError as exc:
        raise ValueError(f"unknown electrode name {exc.args[0]!r} for this layout") from None
    return x[perm]


def segment(trial: Trial, cfg: PreprocessConfig) -> list[np.ndarray]:
    """Slice the stimulus into windows at offsets 0, stride, 2*stride, ..."""
    n = trial.stimulus.shape[1]
    w, s = cfg.window_samples, cfg.window_stride
    if n < w:
        raise ValueError(
            f"trial {trial.subject_id}/{trial.clip_id}: stimulus has {n} samples, "
            f"shorter than one {w}-sample window"
        )
    count = (n - w) // s + 1
    return [trial.stimulus[:, i * s : i * s + w] for i in range(count)]


def binarize(score: int, threshold: int = 3) -> int:
    """Map a 1..5 rating to 1 iff it is >= the threshold."""
    if not 1 <= score <= 5:
        raise ValueError(f"score {score} outside 1..5")
    return 1 if score >= threshold else 0


def build_windows(dataset: Dataset, cfg: PreprocessConfig) -> WindowBatch:
    """Run the full preprocessing chain over every trial.

    Row order is manifest trial order crossed with ascending window offset.
    """
    xs: list[np.ndarray] = []
    labels = {"valence": [], "arousal": [], "dominance": []}
    provenance: list[tuple[str, int, int]] = []
    for trial in dataset.trials:
        if cfg.baseline_mode == "template":
            template = baseline_template(trial, cfg.window_samples)
        else:
            channel_means = trial.baseline.astype(np.float64).mean(axis=1, keepdims=True)
            template = np.broadcast_to(
                channel_means, (trial.n_channels, cfg.window_samples)
            )
        y = {name: binarize(score, cfg.binarize_threshold)
             for name, score in zip(labels, trial.scores())}
        for index, window in enumerate(segment(trial, cfg)):
            cleaned = baseline_remove(window.astype(np.float64), template)
            normalized = zscore(cleaned, cfg.zscore_epsilon)
            ordered = order_channels(dataset.layout, normalized)
            xs.append(ordered[np.newaxis, :, :])
            for name in labels:
                labels[name].append(y[name])
            provenance.append((trial.subject_id, trial.clip_id, index))
    n_channels = dataset.layout.n_channels
    x = (
        np.stack(xs)
        if xs
        else np.empty((0, 1, n_channels, cfg.window_samples), dtype=np.float64)
    )
    return WindowBatch(
        x=x,
        y_valence=np.asarray(labels["valence"], dtype=np.int8),
        y_arousal=np.asarray(labels["arousal"], dtype=np.int8),
        y_dominance=np.asarray(labels["dominance"], dtype=np.int8),
        provenance=tuple(provenance),
    )

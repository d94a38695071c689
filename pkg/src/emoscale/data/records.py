"""Core dataset records: trials, datasets, and the synthetic-EEG config.

Signals are stored as little-endian float32 to mirror the on-disk
interchange format bit for bit; arrays are frozen after construction so
records can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import ChannelLayout

SCORE_NAMES = ("valence", "arousal", "dominance")


def _freeze_signal(arr: np.ndarray, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype="<f4")
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-D (channels x samples), got shape {out.shape}")
    if out.base is not None or out.flags.writeable:
        out = np.array(out, dtype="<f4", order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Trial:
    """One (subject, clip) recording: baseline + stimulus signals and scores.

    ``baseline`` and ``stimulus`` are [channels x samples] in microvolts;
    ``valence``/``arousal``/``dominance`` are self-reported 1..5 integers
    (range is validated at load / report time, not here, so that data-quality
    checks can inspect out-of-range values).
    """

    subject_id: str
    clip_id: int
    baseline: np.ndarray
    stimulus: np.ndarray
    fs: int
    valence: int
    arousal: int
    dominance: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "baseline", _freeze_signal(self.baseline, "baseline"))
        object.__setattr__(self, "stimulus", _freeze_signal(self.stimulus, "stimulus"))
        if self.baseline.shape[0] != self.stimulus.shape[0]:
            raise ValueError(
                f"trial {self.subject_id}/{self.clip_id}: baseline has "
                f"{self.baseline.shape[0]} channels, stimulus {self.stimulus.shape[0]}"
            )
        if self.fs <= 0:
            raise ValueError(f"trial {self.subject_id}/{self.clip_id}: fs must be positive")
        if self.clip_id < 1:
            raise ValueError(f"trial {self.subject_id}/{self.clip_id}: clip_id must be >= 1")

    @property
    def n_channels(self) -> int:
        return self.stimulus.shape[0]

    def scores(self) -> tuple[int, int, int]:
        return (self.valence, self.arousal, self.dominance)


@dataclass(frozen=True)
class Dataset:
    """A channel layout plus the trials recorded with it."""

    layout: ChannelLayout
    trials: tuple[Trial, ...]
    fs: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "trials", tuple(self.trials))
        seen = set()
        for t in self.trials:
            if t.fs != self.fs:
                raise ValueError(f"trial {t.subject_id}/{t.clip_id}: fs {t.fs} != dataset fs {self.fs}")
            if t.n_channels != self.layout.n_channels:
                raise ValueError(
                    f"trial {t.subject_id}/{t.clip_id}: {t.n_channels} channels, "
                    f"layout has {self.layout.n_channels}"
                )
            key = (t.subject_id, t.clip_id)
            if key in seen:
                raise ValueError(f"duplicate trial identity {key}")
            seen.add(key)

    @property
    def n_trials(self) -> int:
        return len(self.trials)


@dataclass(frozen=True)
class ClassTone:
    """A class-conditioned sinusoid: carrier frequency, amplitude multiplier
    (relative to the noise standard deviation), and affected channel rows."""

    freq_hz: float
    amplitude: float
    channels: tuple[int, ...]


def default_class_rule(n_channels: int, fs: int) -> dict[str, dict[int, ClassTone]]:
    """Per-target tones with periods of 16, 8 and 4 samples.

    Tying the carriers to the sample rate keeps them inside the temporal
    kernels (whose lengths are ratio * fs) at any fs. Label 0 carries no
    tone, label 1 a x3 tone, so the two classes differ in band power on
    the affected channels.
    """
    half = n_channels // 2
    left = tuple(range(half))
    right = tuple(range(half, n_channels))
    everywhere = tuple(range(n_channels))
    freqs = {"valence": fs / 16.0, "arousal": fs / 8.0, "dominance": fs / 4.0}
    chans = {"valence": left, "arousal": right, "dominance": everywhere}
    return {
        target: {
            0: ClassTone(freqs[target], 0.0, chans[target]),
            1: ClassTone(freqs[target], 3.0, chans[target]),
        }
        for target in SCORE_NAMES
    }


@dataclass(frozen=True)
class SynthConfig:
    """Seeded synthetic-EEG generator settings."""

    n_subjects: int = 4
    n_trials_per_subject: int = 18
    n_channels: int = 14
    fs: int = 128
    duration_s: float = 8.0
    noise_std: float = 1.0
    seed: int = 0
    class_rule: dict[str, dict[int, ClassTone]] | None = field(default=None)

    def __post_init__(self) -> None:
        if min(self.n_subjects, self.n_trials_per_subject, self.n_channels, self.fs) < 1:
            raise ValueError("counts and fs must be positive")
        if self.duration_s <= 0 or self.noise_std < 0:
            raise ValueError("duration_s must be positive and noise_std non-negative")
        for target, rule in self.resolved_class_rule().items():
            if set(rule) != {0, 1}:
                raise ValueError(f"class_rule[{target}] must map labels 0 and 1")
            for tone in rule.values():
                if not 0 < tone.freq_hz < self.fs / 2:
                    raise ValueError(
                        f"class_rule[{target}]: carrier {tone.freq_hz} Hz outside (0, fs/2)"
                    )
                if any(c < 0 or c >= self.n_channels for c in tone.channels):
                    raise ValueError(f"class_rule[{target}]: channel index out of range")

    def resolved_class_rule(self) -> dict[str, dict[int, ClassTone]]:
        if self.class_rule is not None:
            return self.class_rule
        return default_class_rule(self.n_channels, self.fs)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.fs))

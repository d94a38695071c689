"""Seeded synthetic-EEG generator.

Stimulus signals are white Gaussian noise plus a class-conditioned sinusoid
on a channel subset; baselines are noise only. Everything is a pure function
of the config (seed included): draws happen in a fixed order per trial, so
the same config always yields byte-identical datasets.
"""

from __future__ import annotations

import numpy as np

from .layout import ChannelLayout, DREAMER_CHANNELS
from .records import Dataset, SCORE_NAMES, SynthConfig, Trial


def _layout_for(n_channels: int) -> ChannelLayout:
    if n_channels == len(DREAMER_CHANNELS):
        return ChannelLayout.dreamer()
    return ChannelLayout.from_names(f"CH{i + 1:02d}" for i in range(n_channels))


def synth_generate(cfg: SynthConfig) -> Dataset:
    """Generate a dataset from the config.

    Per trial: three binary labels are drawn uniformly (one per rating
    target), emitted as scores 1 (label 0) or 5 (label 1); the stimulus is
    noise plus each target's class tone with a random phase per affected
    channel; the baseline is noise only.
    """
    rng = np.random.default_rng(cfg.seed)
    rule = cfg.resolved_class_rule()
    layout = _layout_for(cfg.n_channels)
    n = cfg.n_samples
    t = np.arange(n, dtype=np.float64) / cfg.fs

    trials = []
    for s in range(cfg.n_subjects):
        subject_id = f"S{s + 1:02d}"
        for clip in range(1, cfg.n_trials_per_subject + 1):
            labels = {target: int(rng.integers(0, 2)) for target in SCORE_NAMES}
            baseline = cfg.noise_std * rng.standard_normal((cfg.n_channels, n))
            stimulus = cfg.noise_std * rng.standard_normal((cfg.n_channels, n))
            for target in SCORE_NAMES:
                tone = rule[target][labels[target]]
                phases = rng.uniform(0.0, 2.0 * np.pi, size=len(tone.channels))
                if tone.amplitude == 0.0 or not tone.channels:
                    continue
                amp = tone.amplitude * cfg.noise_std
                wave = np.sin(2.0 * np.pi * tone.freq_hz * t[None, :] + phases[:, None])
                stimulus[list(tone.channels), :] += amp * wave
            scores = {target: 5 if labels[target] else 1 for target in SCORE_NAMES}
            trials.append(
                Trial(
                    subject_id=subject_id,
                    clip_id=clip,
                    baseline=baseline.astype("<f4"),
                    stimulus=stimulus.astype("<f4"),
                    fs=cfg.fs,
                    valence=scores["valence"],
                    arousal=scores["arousal"],
                    dominance=scores["dominance"],
                )
            )
    return Dataset(layout=layout, trials=tuple(trials), fs=cfg.fs)

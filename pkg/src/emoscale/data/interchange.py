"""On-disk interchange format, version ``emoscale-v1``.

A dataset directory holds one ``manifest.json`` plus one raw binary file per
signal. Binary layout: little-endian IEEE-754 binary32, channel-major (all
samples of channel 0, then channel 1, ...), no header. Manifest fields::

    {
      "format_version": "emoscale-v1",
      "fs": 128,
      "channel_names": ["AF3", ...],
      "trials": [
        {
          "subject_id": "S01", "clip_id": 1,
          "baseline_file": "S01_c01_baseline.bin", "baseline_samples": 1024,
          "stimulus_file": "S01_c01_stimulus.bin", "stimulus_samples": 1024,
          "valence": 1, "arousal": 5, "dominance": 1,
          "baseline_sha256": "...", "stimulus_sha256": "..."
        }, ...
      ]
    }

Signal paths are relative to the manifest. The sha256 fields are optional;
when present the loader verifies them, which catches in-place byte
corruption that the mandatory length check cannot see. Round trips are
bit-exact: float bit patterns survive write -> load unchanged.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .layout import ChannelLayout, DREAMER_CHANNELS
from .records import Dataset, SCORE_NAMES, Trial

FORMAT_VERSION = "emoscale-v1"
BYTES_PER_SAMPLE = 4


class DatasetError(Exception):
    """Raised when a dataset directory fails to load or validate."""


def _signal_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def write_dataset(dataset: Dataset, out_dir) -> Path:
    """Write the dataset to ``out_dir`` and return the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials_meta = []
    for t in dataset.trials:
        stem = f"{t.subject_id}_c{t.clip_id:02d}"
        entry = {"subject_id": t.subject_id, "clip_id": t.clip_id}
        for kind, arr in (("baseline", t.baseline), ("stimulus", t.stimulus)):
            fname = f"{stem}_{kind}.bin"
            payload = _signal_bytes(arr)
            (out_dir / fname).write_bytes(payload)
            entry[f"{kind}_file"] = fname
            entry[f"{kind}_samples"] = arr.shape[1]
            entry[f"{kind}_sha256"] = hashlib.sha256(payload).hexdigest()
        entry.update(
            valence=t.valence, arousal=t.arousal, dominance=t.dominance
        )
        trials_meta.append(entry)
    manifest = {
        "format_version": FORMAT_VERSION,
        "fs": dataset.fs,
        "channel_names": list(dataset.layout.names),
        "trials": trials_meta,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def _load_signal(base: Path, entry: dict, kind: str, n_channels: int, ident: str) -> np.ndarray:
    fname = entry.get(f"{kind}_file")
    n_samples = entry.get(f"{kind}_samples")
    if fname is None or n_samples is None:
        raise DatasetError(f"{ident}: manifest entry missing {kind} file/sample fields")
    path = base / fname
    if not path.is_file():
        raise DatasetError(f"{ident}: missing {kind} file {path}")
    payload = path.read_bytes()
    expected = n_channels * int(n_samples) * BYTES_PER_SAMPLE
    if len(payload) != expected:
        raise DatasetError(
            f"{ident}: {kind} payload is {len(payload)} bytes, "
            f"expected {n_channels} channels x {n_samples} samples x 4 = {expected}"
        )
    digest = entry.get(f"{kind}_sha256")
    if digest is not None and hashlib.sha256(payload).hexdigest() != digest:
        raise DatasetError(f"{ident}: {kind} payload failed checksum validation")
    return np.frombuffer(payload, dtype="<f4").reshape(n_channels, int(n_samples))


def load_dataset(manifest_path) -> Dataset:
    """Load a dataset from its manifest, validating structure as it goes.

    Errors name the offending trial as subject/clip so a bad conversion can
    be pinpointed without a debugger.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DatasetError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"manifest is not valid JSON: {exc}") from exc
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetError(f"unknown format version {version!r}, expected {FORMAT_VERSION!r}")

    names = manifest.get("channel_names")
    fs = manifest.get("fs")
    if not isinstance(names, list) or not names:
        raise DatasetError("manifest channel_names must be a non-empty list")
    if not isinstance(fs, int) or fs <= 0:
        raise DatasetError(f"manifest fs must be a positive integer, got {fs!r}")
    layout = (
        ChannelLayout.dreamer()
        if tuple(names) == DREAMER_CHANNELS
        else ChannelLayout.from_names(names)
    )

    base = manifest_path.parent
    trials = []
    for entry in manifest.get("trials", []):
        subject = entry.get("subject_id", "?")
        clip = entry.get("clip_id", "?")
        ident = f"trial {subject}/{clip}"
        scores = {}
        for score in SCORE_NAMES:
            value = entry.get(score)
            if not isinstance(value, int) or isinstance(value, bool):
                raise DatasetError(f"{ident}: {score} score must be an integer, got {value!r}")
            if not 1 <= value <= 5:
                raise DatasetError(f"{ident}: {score} score {value} outside 1..5")
            scores[score] = value
        baseline = _load_signal(base, entry, "baseline", len(names), ident)
        stimulus = _load_signal(base, entry, "stimulus", len(names), ident)
        trials.append(
            Trial(
                subject_id=str(subject),
                clip_id=int(entry["clip_id"]),
                baseline=baseline,
                stimulus=stimulus,
                fs=fs,
                **scores,
            )
        )
    return Dataset(layout=layout, trials=tuple(trials), fs=fs)

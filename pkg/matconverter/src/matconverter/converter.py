"""DREAMER MATLAB container -> emoscale-v1 interchange conversion.

The source is the distributed ``DREAMER.mat``: a top-level struct holding a
``Data`` cell (one struct per subject, each with per-clip ``EEG.baseline``
and ``EEG.stimuli`` cells plus three score vectors) and recording metadata.
Conversion is strict: wrong channel counts, missing fields, or out-of-range
scores raise with the exact path into the container, never a silent fix.
Values are cast to little-endian binary32 on write (the interchange
precision); nothing is reordered or rescaled.

Emitted layout: ``manifest.json`` plus one raw channel-major binary32 file
per signal, compatible with the emoscale loader::

    {"format_version": "emoscale-v1", "fs": ..., "channel_names": [...],
     "trials": [{"subject_id", "clip_id", "baseline_file",
                 "baseline_samples", "baseline_sha256", "stimulus_file",
                 "stimulus_samples", "stimulus_sha256",
                 "valence", "arousal", "dominance"}, ...]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import loadmat

FORMAT_VERSION = "emoscale-v1"

DREAMER_CHANNELS = (
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
    "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
)

SCORE_FIELDS = {
    "valence": "ScoreValence",
    "arousal": "ScoreArousal",
    "dominance": "ScoreDominance",
}


class StructuralMismatch(Exception):
    """The container does not look like a DREAMER distribution; the message
    carries the path of the offending element."""


@dataclass
class ConversionReport:
    """What the converter found and emitted, for provenance records."""

    source_key: str
    n_subjects: int
    n_clips: int
    n_channels: int
    fs: int
    electrode_source: str  # "container" | "canonical-default"
    eeg_fields_found: tuple[str, ...]
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        lines = [
            f"source struct: {self.source_key}",
            f"subjects: {self.n_subjects}, clips per subject: {self.n_clips}, "
            f"channels: {self.n_channels}, fs: {self.fs}",
            f"electrode names: {self.electrode_source}",
            f"EEG fields found: {', '.join(self.eeg_fields_found)}",
        ]
        lines.extend(self.notes)
        return "\n".join(lines)


def _cells(value) -> list:
    """Normalize a squeezed MATLAB cell (object array or bare element).

    A one-cell array squeezes to its bare numeric payload; treat that as a
    single cell rather than exploding it element by element.
    """
    if isinstance(value, np.ndarray) and value.dtype != object:
        return [value]
    arr = np.atleast_1d(np.asarray(value, dtype=object)).ravel()
    return list(arr)


def _fields_of(struct) -> list[str]:
    return [name for name in getattr(struct, "_fieldnames", []) ]


def _require(struct, name: str, path: str):
    if not hasattr(struct, name):
        raise StructuralMismatch(f"{path}: missing field {name!r}")
    return getattr(struct, name)


def _load_container(mat_path: Path):
    mat = loadmat(str(mat_path), squeeze_me=True, struct_as_record=False)
    keys = [k for k in mat if not k.startswith("__")]
    if "DREAMER" in keys:
        return "DREAMER", mat["DREAMER"]
    if len(keys) == 1:
        return keys[0], mat[keys[0]]
    raise StructuralMismatch(
        f"cannot locate the data struct: top-level variables {sorted(keys)}"
    )


def _signal_matrix(cell, n_channels: int, path: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(cell, dtype=np.float64))
    if arr.ndim != 2:
        raise StructuralMismatch(f"{path}: expected a 2-D signal array, got shape {arr.shape}")
    if arr.shape[1] != n_channels:
        raise StructuralMismatch(
            f"{path}: expected {n_channels} channels (columns), found {arr.shape[1]}"
        )
    # source stores samples x channels; the interchange is channel-major
    return np.ascontiguousarray(arr.T, dtype="<f4")


def _scores_of(subject, n_clips: int, path: str) -> dict[str, list[int]]:
    scores: dict[str, list[int]] = {}
    for name, mat_field in SCORE_FIELDS.items():
        raw = np.atleast_1d(np.asarray(_require(subject, mat_field, path))).ravel()
        if raw.size != n_clips:
            raise StructuralMismatch(
                f"{path}.{mat_field}: {raw.size} scores for {n_clips} clips"
            )
        values = []
        for j, value in enumerate(raw):
            score = int(value)
            if score != value or not 1 <= score <= 5:
                raise StructuralMismatch(
                    f"{path}.{mat_field}[{j}]: score {value!r} outside the 1..5 scale"
                )
            values.append(score)
        scores[name] = values
    return scores


def convert(mat_path, out_dir) -> tuple[Path, ConversionReport]:
    """Convert a DREAMER container; returns (manifest path, report)."""
    mat_path = Path(mat_path)
    if not mat_path.is_file():
        raise StructuralMismatch(f"source not found: {mat_path}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    source_key, container = _load_container(mat_path)
    subjects = _cells(_require(container, "Data", source_key))
    if not subjects:
        raise StructuralMismatch(f"{source_key}.Data: no subject records")

    notes: list[str] = []
    if hasattr(container, "EEG_SamplingRate"):
        fs = int(np.asarray(container.EEG_SamplingRate).ravel()[0])
    else:
        fs = 128
        notes.append("EEG_SamplingRate missing from container; recorded fs=128")

    if hasattr(container, "EEG_Electrodes"):
        names = [str(n) for n in _cells(container.EEG_Electrodes)]
        electrode_source = "container"
    else:
        names = list(DREAMER_CHANNELS)
        electrode_source = "canonical-default"
        notes.append("EEG_Electrodes missing; using the canonical 14-name list")
    n_channels = len(names)
    if n_channels != len(DREAMER_CHANNELS):
        raise StructuralMismatch(
            f"{source_key}.EEG_Electrodes: expected the 14-sensor headset, "
            f"found {n_channels} electrode names"
        )

    first_eeg = _require(subjects[0], "EEG", f"{source_key}.Data[0]")
    eeg_fields = tuple(_fields_of(first_eeg)) or ("baseline", "stimuli")
    if "baseline" in eeg_fields and "stimuli" in eeg_fields:
        notes.append("baseline and stimulus segments are stored as separate fields")

    trials = []
    n_clips = None
    for i, subject in enumerate(subjects):
        path = f"{source_key}.Data[{i}]"
        eeg = _require(subject, "EEG", path)
        baselines = _cells(_require(eeg, "baseline", f"{path}.EEG"))
        stimuli = _cells(_require(eeg, "stimuli", f"{path}.EEG"))
        if len(baselines) != len(stimuli):
            raise StructuralMismatch(
                f"{path}.EEG: {len(baselines)} baseline cells vs {len(stimuli)} stimuli"
            )
        if n_clips is None:
            n_clips = len(stimuli)
        elif len(stimuli) != n_clips:
            raise StructuralMismatch(
                f"{path}.EEG: {len(stimuli)} clips, other subjects have {n_clips}"
            )
        scores = _scores_of(subject, n_clips, path)
        subject_id = f"S{i + 1:02d}"
        for j in range(n_clips):
            entry = {"subject_id": subject_id, "clip_id": j + 1}
            for kind, cell in (("baseline", baselines[j]), ("stimulus", stimuli[j])):
                mat_field = "baseline" if kind == "baseline" else "stimuli"
                signal = _signal_matrix(
                    cell, n_channels, f"{path}.EEG.{mat_field}[{j}]"
                )
                fname = f"{subject_id}_c{j + 1:02d}_{kind}.bin"
                payload = signal.tobytes()
                (out_dir / fname).write_bytes(payload)
                entry[f"{kind}_file"] = fname
                entry[f"{kind}_samples"] = signal.shape[1]
                entry[f"{kind}_sha256"] = hashlib.sha256(payload).hexdigest()
            for name in SCORE_FIELDS:
                entry[name] = scores[name][j]
            trials.append(entry)

    manifest = {
        "format_version": FORMAT_VERSION,
        "fs": fs,
        "channel_names": names,
        "trials": trials,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    notes.append("values cast from source float64 to binary32 on write")
    if len(subjects) != 23 or n_clips != 18:
        notes.append(
            f"source holds {len(subjects)} subjects x {n_clips} clips "
            "(the published distribution has 23 x 18)"
        )
    report = ConversionReport(
        source_key=source_key,
        n_subjects=len(subjects),
        n_clips=n_clips or 0,
        n_channels=n_channels,
        fs=fs,
        electrode_source=electrode_source,
        eeg_fields_found=eeg_fields,
        notes=notes,
    )
    return manifest_path, report


@dataclass
class VerifyReport:
    divergences: list[str]

    @property
    def clean(self) -> bool:
        return not self.divergences

    def summary(self) -> str:
        if self.clean:
            return "verify: conversion matches the source (0 divergences)"
        lines = [f"verify: {len(self.divergences)} divergence(s)"]
        lines.extend(f"  - {d}" for d in self.divergences)
        return "\n".join(lines)


def verify(manifest_path, mat_path) -> VerifyReport:
    """Re-read both sides and compare counts, scores, and per-channel
    checksums of the binary32-cast float values."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    divergences: list[str] = []

    source_key, container = _load_container(Path(mat_path))
    subjects = _cells(_require(container, "Data", source_key))
    n_channels = len(manifest["channel_names"])

    trials = {(t["subject_id"], t["clip_id"]): t for t in manifest.get("trials", [])}
    expected_total = 0
    for i, subject in enumerate(subjects):
        path = f"{source_key}.Data[{i}]"
        subject_id = f"S{i + 1:02d}"
        eeg = _require(subject, "EEG", path)
        baselines = _cells(eeg.baseline)
        stimuli = _cells(eeg.stimuli)
        scores = _scores_of(subject, len(stimuli), path)
        expected_total += len(stimuli)
        for j in range(len(stimuli)):
            key = (subject_id, j + 1)
            entry = trials.get(key)
            if entry is None:
                divergences.append(f"{key}: present in source, missing from manifest")
                continue
            for name in SCORE_FIELDS:
                if entry.get(name) != scores[name][j]:
                    divergences.append(
                        f"{key}: {name} score {entry.get(name)!r} in manifest, "
                        f"{scores[name][j]} in source"
                    )
            for kind, cell, mat_field in (
                ("baseline", baselines[j], "baseline"),
                ("stimulus", stimuli[j], "stimuli"),
            ):
                signal = _signal_matrix(cell, n_channels, f"{path}.EEG.{mat_field}[{j}]")
                if entry.get(f"{kind}_samples") != signal.shape[1]:
                    divergences.append(
                        f"{key}: {kind} has {entry.get(f'{kind}_samples')} samples "
                        f"in manifest, {signal.shape[1]} in source"
                    )
                    continue
                bin_path = base / entry[f"{kind}_file"]
                if not bin_path.is_file():
                    divergences.append(f"{key}: {kind} file {bin_path.name} missing")
                    continue
                written = np.frombuffer(bin_path.read_bytes(), dtype="<f4")
                if written.size != signal.size:
                    divergences.append(f"{key}: {kind} payload length mismatch")
                    continue
                written = written.reshape(n_channels, -1)
                for c in range(n_channels):
                    ours = hashlib.sha256(written[c].tobytes()).hexdigest()
                    theirs = hashlib.sha256(signal[c].tobytes()).hexdigest()
                    if ours != theirs:
                        divergences.append(
                            f"{key}: {kind} channel {c} checksum mismatch"
                        )
    if len(trials) != expected_total:
        divergences.append(
            f"manifest lists {len(trials)} trials, source holds {expected_total}"
        )
    return VerifyReport(divergences=divergences)

"""Miniature MAT fixtures mirroring the DREAMER container structure."""

import numpy as np
import pytest
from scipy.io import savemat

CHANNELS = (
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
    "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
)


def build_fixture(
    path,
    n_subjects: int = 2,
    n_clips: int = 2,
    n_channels: int = 14,
    baseline_samples: int = 256,
    stimulus_samples: int = 384,
    fs: int = 128,
    seed: int = 0,
):
    """Write a structurally faithful mini container: Data cell of per-subject
    structs, per-clip EEG baseline/stimuli cells of samples x channels
    arrays, and three 1..5 score vectors."""
    rng = np.random.default_rng(seed)
    subjects = np.empty((1, n_subjects), dtype=object)
    for i in range(n_subjects):
        baseline = np.empty((n_clips, 1), dtype=object)
        stimuli = np.empty((n_clips, 1), dtype=object)
        for j in range(n_clips):
            baseline[j, 0] = rng.normal(size=(baseline_samples, n_channels))
            stimuli[j, 0] = rng.normal(size=(stimulus_samples, n_channels))
        subjects[0, i] = {
            "Age": "23",
            "Gender": "male" if i % 2 else "female",
            "EEG": {"baseline": baseline, "stimuli": stimuli},
            "ECG": {"baseline": baseline, "stimuli": stimuli},
            "ScoreValence": rng.integers(1, 6, (n_clips, 1)).astype(float),
            "ScoreArousal": rng.integers(1, 6, (n_clips, 1)).astype(float),
            "ScoreDominance": rng.integers(1, 6, (n_clips, 1)).astype(float),
        }
    doc = {
        "DREAMER": {
            "Data": subjects,
            "EEG_SamplingRate": float(fs),
            "ECG_SamplingRate": 256.0,
            "EEG_Electrodes": np.array(CHANNELS[:n_channels], dtype=object),
            "noOfSubjects": float(n_subjects),
            "noOfVideoSequences": float(n_clips),
        }
    }
    savemat(str(path), doc)
    return path


@pytest.fixture
def mini_mat(tmp_path):
    return build_fixture(tmp_path / "mini.mat")

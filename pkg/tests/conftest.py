"""Shared fixtures: single-threaded math plus tiny dataset/model factories.

Thread caps are set before numpy loads so BLAS reductions run in a fixed
order; bit-reproducibility claims are only made for single-threaded runs.
"""

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest

from emoscale.data import SynthConfig, synth_generate
from emoscale.model import ModelConfig
from emoscale.preprocess import PreprocessConfig


TINY_MODEL_KW = dict(
    ratios=(0.5, 0.25),
    num_temporal_maps=2,
    num_spatial_maps=2,
    temporal_pool=2,
    spatial_pool=2,
    fusion_pool=2,
    hidden_units=4,
    dropout_rate=0.0,
)


def tiny_model_config(**overrides) -> ModelConfig:
    kw = dict(fs=32, channels=4, window_samples=32, **TINY_MODEL_KW)
    kw.update(overrides)
    return ModelConfig(**kw)


def tiny_synth_config(**overrides) -> SynthConfig:
    kw = dict(
        n_subjects=2,
        n_trials_per_subject=5,
        n_channels=4,
        fs=32,
        duration_s=2.0,
        noise_std=1.0,
        seed=11,
    )
    kw.update(overrides)
    return SynthConfig(**kw)


@pytest.fixture(scope="session")
def tiny_dataset():
    return synth_generate(tiny_synth_config())


@pytest.fixture
def tiny_pre_cfg():
    return PreprocessConfig(window_samples=32, window_stride=32)

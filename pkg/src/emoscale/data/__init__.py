"""Dataset records, the on-disk interchange format, validation, and the
synthetic-EEG generator."""

from .interchange import FORMAT_VERSION, DatasetError, load_dataset, write_dataset
from .layout import ChannelLayout, DREAMER_CHANNELS, hemisphere_of, quadrant_geometry
from .records import ClassTone, Dataset, SCORE_NAMES, SynthConfig, Trial, default_class_rule
from .synth import synth_generate
from .validation import Issue, ValidationReport, validate_dataset

__all__ = [
    "ChannelLayout",
    "ClassTone",
    "DREAMER_CHANNELS",
    "Dataset",
    "DatasetError",
    "FORMAT_VERSION",
    "Issue",
    "SCORE_NAMES",
    "SynthConfig",
    "Trial",
    "ValidationReport",
    "default_class_rule",
    "hemisphere_of",
    "load_dataset",
    "quadrant_geometry",
    "synth_generate",
    "validate_dataset",
    "write_dataset",
]

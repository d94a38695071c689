"""EEG emotion-recognition pipeline: interchange data format, preprocessing,
a from-scratch multi-scale convolutional network with exact gradients,
trial-level splits and training, classification metrics, and file reports."""

__version__ = "0.1.0"

from . import data, metrics, model, preprocess, report, training

__all__ = ["data", "metrics", "model", "preprocess", "report", "training"]

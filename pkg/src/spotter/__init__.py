"""Sliding-window scene-text spotting with single-character and bigram
convolutional detectors: training, dense inference, synthetic data,
MAC accounting and ROC evaluation."""

__version__ = "0.1.0"

from . import kernels
from .ops import ConvParams, GradBundle

__all__ = ["ConvParams", "GradBundle", "kernels", "__version__"]

"""Curiosity features and clickbait classifiers for news headlines."""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

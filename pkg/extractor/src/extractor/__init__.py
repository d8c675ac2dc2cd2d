"""Activation extraction into the semrsm NPY/JSON interchange."""

from .extract import build_model, extract, list_images

__version__ = "0.1.0"

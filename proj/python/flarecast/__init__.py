"""Visible-to-IR flame translation, radiation-zone segmentation and flame geometry."""

from ._core import *  # noqa: F401,F403
from ._core import FlarecastError, Segmenter, Translator

__version__ = "0.1.0"

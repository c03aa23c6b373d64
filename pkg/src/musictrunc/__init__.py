"""Truncation sampling and evaluation for symbolic-music language models."""

from musictrunc._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

"""Lift-connected surface codes: construction, decoding, and experiments."""

from __future__ import annotations

from ._kernels import BACKEND

__all__ = ["BACKEND", "__version__"]

__version__ = "0.1.0"

"""Kernel backend selection.

The compiled Cython extension is preferred; the pure-Python module is a
drop-in fallback with identical integer results. Override with the
environment variable ``LCS_CODES_BACKEND`` set to ``compiled`` or ``pure``.
"""

from __future__ import annotations

import os

__all__ = ["backend", "get_backend", "BACKEND"]

_CHOICE = os.environ.get("LCS_CODES_BACKEND", "auto")


def get_backend(name: str):
    """Return a kernel module by name ('pure' or 'compiled')."""
    if name == "pure":
        from . import _pure

        return _pure
    if name == "compiled":
        from . import _accel

        return _accel
    raise ValueError(f"unknown kernel backend {name!r}")


if _CHOICE == "auto":
    try:
        backend = get_backend("compiled")
    except ImportError:
        backend = get_backend("pure")
elif _CHOICE in ("compiled", "pure"):
    backend = get_backend(_CHOICE)
else:
    raise ValueError(
        f"LCS_CODES_BACKEND={_CHOICE!r}: expected 'auto', 'compiled' or 'pure'"
    )

BACKEND = backend.BACKEND

"""Selects the compiled alignment kernel, or the pure-Python fallback.

Set ``DUALHYP_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _align_py

BACKEND: str
if os.environ.get("DUALHYP_PURE_PYTHON"):
    edit_distance = _align_py.edit_distance
    edit_ops = _align_py.edit_ops
    BACKEND = "python"
else:
    try:
        from . import _align_ext
    except ImportError:
        edit_distance = _align_py.edit_distance
        edit_ops = _align_py.edit_ops
        BACKEND = "python"
    else:
        edit_distance = _align_ext.edit_distance
        edit_ops = _align_ext.edit_ops
        BACKEND = "cython"

__all__ = ["BACKEND", "edit_distance", "edit_ops"]

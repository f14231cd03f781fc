"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``ALLCLEAR_TSF_BACKEND=numpy`` to force the fallback.
"""
import os

from . import _pure

if os.environ.get("ALLCLEAR_TSF_BACKEND", "").lower() in ("numpy", "pure", "python"):
    backend = _pure
else:
    try:
        from . import _core as backend
    except ImportError:
        backend = _pure

BACKEND = backend.NAME
interval_features = backend.interval_features
best_split = backend.best_split

__all__ = ["BACKEND", "interval_features", "best_split"]

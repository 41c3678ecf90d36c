"""Backend selection for the warp kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over.  Setting ``LAYERBLUR_BACKEND=python`` forces the
fallback (useful for debugging and for the benchmark).
"""
import logging
import os

from . import _warp_py

logger = logging.getLogger(__name__)

_forced = os.environ.get("LAYERBLUR_BACKEND", "").lower()

if _forced == "python":
    _impl = _warp_py
    BACKEND = "python"
else:
    try:
        from . import _cwarp as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        logger.info("compiled warp kernels unavailable; using numpy fallback")
        _impl = _warp_py
        BACKEND = "python"

warp_stack = _impl.warp_stack
warp_adjoint_sum = _impl.warp_adjoint_sum

__all__ = ["BACKEND", "warp_stack", "warp_adjoint_sum"]

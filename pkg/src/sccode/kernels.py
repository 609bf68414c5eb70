"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise (or
when the environment variable ``SCCODE_PURE_PYTHON`` is set to a non-empty
value other than ``0``) the numpy fallback in ``_kernels_py`` is used.
"""

import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)


def _load():
    if os.environ.get("SCCODE_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        logger.debug("compiled kernels unavailable, using numpy fallback")
        return _kernels_py, "python"
    return _kernels, "compiled"


_impl, BACKEND = _load()

zero_crossing_update = _impl.zero_crossing_update
partial_distances = _impl.partial_distances
knn_fill = _impl.knn_fill


def backend_module(name):
    """Kernel module by name (``"python"`` or ``"compiled"``)."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")

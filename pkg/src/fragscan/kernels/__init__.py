"""Hot numeric kernels with a compiled core and a numpy fallback.

The compiled extension (``_core``, built from ``_core.pyx``) is preferred;
the numpy implementation in :mod:`pyref` is selected automatically when the
extension is not built.  Set ``FRAGSCAN_KERNELS=python`` or ``=compiled`` to
force a choice at import, or call :func:`use_backend` to switch at runtime
(the benchmark uses this to compare the two).

Both implementations accumulate convolution terms in the same order, so a
given input yields bit-identical output on either backend.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import numpy as np

from . import pyref

_BACKENDS = {"python": pyref}
try:
    from . import _core

    _BACKENDS["compiled"] = _core
except ImportError:
    _core = None

_requested = os.environ.get("FRAGSCAN_KERNELS", "auto")
if _requested == "auto":
    _active = "compiled" if _core is not None else "python"
elif _requested in _BACKENDS:
    _active = _requested
elif _requested == "compiled":
    raise ImportError("FRAGSCAN_KERNELS=compiled but the extension is not built; run pip install -e .")
else:
    raise ImportError(f"FRAGSCAN_KERNELS={_requested!r}: expected auto, compiled, or python")


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return _active


def use_backend(name: str) -> str:
    """Select a backend by name; returns the previously active one."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    previous = _active
    _active = name
    return previous


@contextmanager
def backend(name: str):
    previous = use_backend(name)
    try:
        yield
    finally:
        use_backend(previous)


def conv2d_valid(maps: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid multi-channel correlation; see kernels.pyref.conv2d_valid."""
    return _BACKENDS[_active].conv2d_valid(maps, kernels, bias)


def maxpool2d(maps: np.ndarray, k: int, off_x: int = 0, off_y: int = 0) -> np.ndarray:
    """Offset max-pooling; see kernels.pyref.maxpool2d."""
    return _BACKENDS[_active].maxpool2d(maps, k, off_x, off_y)

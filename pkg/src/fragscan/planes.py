"""2D feature maps, map sets, and fragment bookkeeping.

A single map ("plane") is a 2-D numpy array indexed ``[y, x]`` (row-major),
and a set of equally sized maps is a 3-D array of shape
``(count, height, width)``.  Arithmetic runs in float32 by default;
:func:`set_precision` switches the whole package to float64 for
tight-tolerance verification.

A :class:`Fragment` ties a map set to the scanned image: map coordinate
``(mx, my)`` holds data for the window whose top-left pixel sits at
``(anchor_x + stride * mx, anchor_y + stride * my)``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import CropRangeError

_DTYPE = np.float32

_PRECISIONS = {"f32": np.float32, "f64": np.float64}


def set_precision(mode: str) -> None:
    """Select the global float width: ``"f32"`` (default) or ``"f64"``."""
    global _DTYPE
    try:
        _DTYPE = _PRECISIONS[mode]
    except KeyError:
        raise ValueError(f"unknown precision {mode!r}; expected 'f32' or 'f64'") from None


def float_dtype() -> type:
    """The numpy dtype currently used for all map data."""
    return _DTYPE


@contextmanager
def precision(mode: str):
    """Temporarily switch the global precision (mainly for tests)."""
    previous = "f64" if _DTYPE is np.float64 else "f32"
    set_precision(mode)
    try:
        yield
    finally:
        set_precision(previous)


def crop(plane: np.ndarray, x: int, y: int, w: int, h: int) -> np.ndarray:
    """Copy the ``w x h`` subwindow whose top-left corner is ``(x, y)``.

    Accepts a single plane ``(h, w)`` or a stacked set ``(n, h, w)``; the
    window applies to the trailing two axes.  The source is never modified.
    """
    src_h, src_w = plane.shape[-2], plane.shape[-1]
    if x < 0 or y < 0 or w < 0 or h < 0:
        raise CropRangeError(f"negative crop argument: x={x} y={y} w={w} h={h}")
    if x + w > src_w:
        raise CropRangeError(f"crop right edge x+w={x + w} exceeds plane width {src_w}")
    if y + h > src_h:
        raise CropRangeError(f"crop bottom edge y+h={y + h} exceeds plane height {src_h}")
    return np.ascontiguousarray(plane[..., y : y + h, x : x + w])


@dataclass(frozen=True)
class PlanesDiff:
    """Result of comparing two map sets elementwise."""

    equal: bool
    max_abs_diff: float
    location: tuple[int, ...] | None
    message: str

    def __bool__(self) -> bool:
        return self.equal


def planes_equal(a: np.ndarray, b: np.ndarray, tol: float = 0.0) -> PlanesDiff:
    """Compare two equally shaped map sets within an absolute tolerance.

    A shape mismatch is reported as unequal rather than raised; otherwise the
    report carries the largest absolute difference and its index.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return PlanesDiff(False, float("inf"), None, f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return PlanesDiff(True, 0.0, None, "empty maps are equal")
    diff = np.abs(a.astype(np.float64) - b.astype(np.float64))
    flat = int(np.argmax(diff))
    location = tuple(int(i) for i in np.unravel_index(flat, diff.shape))
    worst = float(diff.flat[flat])
    ok = worst <= tol
    verdict = "within" if ok else "exceeds"
    return PlanesDiff(ok, worst, location, f"max |a-b| = {worst:.6e} at {location} {verdict} tol {tol:g}")


@dataclass
class Fragment:
    """A set of extended maps plus its placement in the scanned image."""

    maps: np.ndarray  # (count, height, width)
    anchor_x: int = 0
    anchor_y: int = 0
    stride: int = 1

    def __post_init__(self) -> None:
        if self.maps.ndim != 3:
            raise ValueError(f"fragment maps must be (count, height, width), got shape {self.maps.shape}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not (0 <= self.anchor_x < self.stride and 0 <= self.anchor_y < self.stride):
            raise ValueError(
                f"anchor ({self.anchor_x}, {self.anchor_y}) must lie in [0, stride={self.stride})"
            )

    @property
    def count(self) -> int:
        return self.maps.shape[0]

    @property
    def height(self) -> int:
        return self.maps.shape[1]

    @property
    def width(self) -> int:
        return self.maps.shape[2]


@dataclass
class FragmentLayerState:
    """All fragments produced by one layer."""

    fragments: list[Fragment] = field(default_factory=list)
    layer_index: int = 0

    def __len__(self) -> int:
        return len(self.fragments)

    def anchors(self) -> list[tuple[int, int, int]]:
        """(anchor_x, anchor_y, stride) triples, in fragment order."""
        return [(f.anchor_x, f.anchor_y, f.stride) for f in self.fragments]

"""Grayscale image I/O, mirror padding, and the posterior dump format.

Only binary 8-bit PGM ("P5") is supported for images.  Pixel bytes map to
floats by v / 255.  Posterior volumes use the "FSP1" container: the 4 magic
bytes, width / height / class count as u32 LE, then float32 LE values in
row-major (y, x, class) order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ImageFileError, LayerSizeError
from .planes import float_dtype
from .rng import XorShift64Star

POSTERIOR_MAGIC = b"FSP1"

_WHITESPACE = b" \t\r\n\v\f"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and '#' comment lines."""
    n = len(data)
    while pos < n:
        byte = data[pos : pos + 1]
        if byte in (b"#",):
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        elif byte in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageFileError("truncated PGM header")
    return data[start:pos], pos


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary 8-bit PGM into a (1, height, width) map set in [0, 1]."""
    data = Path(path).read_bytes()
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise ImageFileError(f"{path}: not a binary PGM (magic {magic!r}, expected b'P5')")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise ImageFileError(f"{path}: bad {name} field {token!r}") from None
        fields.append(value)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFileError(f"{path}: bad dimensions {width}x{height}")
    if not 1 <= maxval <= 255:
        raise ImageFileError(f"{path}: unsupported max value {maxval} (only 8-bit, <= 255)")
    pos += 1  # single whitespace byte after the header
    payload = data[pos : pos + width * height]
    if len(payload) < width * height:
        raise ImageFileError(f"{path}: truncated pixels, need {width * height} bytes, have {len(payload)}")
    plane = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return (plane.astype(float_dtype()) / 255)[None]


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to bytes with a platform-stable rule: floor(v*255 + 0.5)."""
    return np.floor(np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_pgm(path: str | Path, plane: np.ndarray) -> None:
    """Write one plane of [0, 1] floats (or a (1, h, w) set) as binary PGM."""
    if plane.ndim == 3:
        if plane.shape[0] != 1:
            raise ImageFileError(f"PGM holds a single plane, got {plane.shape[0]}")
        plane = plane[0]
    h, w = plane.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quantize_u8(plane).tobytes())


def class_map_bytes(labels: np.ndarray, classes: int) -> np.ndarray:
    """Render class indices as bytes: floor(255 * c / (classes - 1) + 0.5)."""
    span = classes - 1
    if span <= 0:
        return np.zeros_like(labels, dtype=np.uint8)
    return np.floor(labels.astype(np.float64) * (255.0 / span) + 0.5).astype(np.uint8)


def write_class_map(path: str | Path, labels: np.ndarray, classes: int) -> None:
    h, w = labels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(class_map_bytes(labels, classes).tobytes())


def mirror_pad(maps: np.ndarray, margin: int) -> np.ndarray:
    """Pad by reflecting about the border pixel, without repeating it.

    A row [a, b, c] with margin 1 becomes [b, a, b, c, b].  Works on (h, w)
    planes and (n, h, w) sets; margin must be smaller than both sides.
    """
    if margin == 0:
        return maps.copy()
    h, w = maps.shape[-2], maps.shape[-1]
    if margin >= h or margin >= w:
        raise LayerSizeError(f"margin {margin} too large to reflect a {w}x{h} plane (needs margin < side)")
    pad = [(0, 0)] * (maps.ndim - 2) + [(margin, margin), (margin, margin)]
    return np.pad(maps, pad, mode="reflect")


def save_posteriors(path: str | Path, posteriors: np.ndarray) -> None:
    """Write an (h, w, classes) posterior volume as FSP1 (float32 payload)."""
    h, w, classes = posteriors.shape
    with open(path, "wb") as fh:
        fh.write(POSTERIOR_MAGIC)
        fh.write(struct.pack("<III", w, h, classes))
        fh.write(np.ascontiguousarray(posteriors, dtype="<f4").tobytes())


def load_posteriors(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != POSTERIOR_MAGIC:
        raise ImageFileError(f"{path}: bad magic {data[:4]!r}, expected {POSTERIOR_MAGIC!r}")
    w, h, classes = struct.unpack_from("<III", data, 4)
    need = w * h * classes
    values = np.frombuffer(data[16:], dtype="<f4")
    if values.size != need:
        raise ImageFileError(f"{path}: payload holds {values.size} floats, header promises {need}")
    return values.reshape(h, w, classes).astype(np.float32)


def synthetic_slice(width: int, height: int | None = None, seed: int = 0) -> np.ndarray:
    """Deterministic grayscale test image as a (1, h, w) map set in [0, 1].

    Pixel bytes come from the package's seeded generator, so fixtures are
    byte-identical on every platform.
    """
    height = width if height is None else height
    raw = XorShift64Star(seed).bytes_u8(width * height).reshape(height, width)
    return (raw.astype(float_dtype()) / 255)[None]

"""Numpy implementations of the hot kernels.

Per output position, convolution terms accumulate in a fixed order: the bias
first, then input maps in index order, then kernel rows, then kernel columns.
The compiled core uses the same order, so the two backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np


def conv2d_valid(maps: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid (un-padded) multi-channel correlation at stride 1.

    maps: (n_in, h, w); kernels: (n_out, n_in, k, k); bias: (n_out,).
    Returns (n_out, h - k + 1, w - k + 1).  Caller guarantees h, w >= k.
    """
    n_in, h, w = maps.shape
    n_out, n_in_k, k, _ = kernels.shape
    if n_in_k != n_in:
        raise ValueError(f"kernels expect {n_in_k} input maps, got {n_in}")
    oh, ow = h - k + 1, w - k + 1
    out = np.empty((n_out, oh, ow), dtype=maps.dtype)
    out[:] = bias[:, None, None]
    for c in range(n_in):
        plane = maps[c]
        for i in range(k):
            for j in range(k):
                out += kernels[:, c, i, j][:, None, None] * plane[i : i + oh, j : j + ow]
    return out


def maxpool2d(maps: np.ndarray, k: int, off_x: int = 0, off_y: int = 0) -> np.ndarray:
    """Max over k x k blocks starting at (off_x, off_y).

    The off_x leftmost columns, the off_y top rows, and any trailing partial
    block on the right/bottom are ignored.  Returns
    (n, (h - off_y) // k, (w - off_x) // k); either output side may be 0.
    """
    n, h, w = maps.shape
    oh, ow = max((h - off_y) // k, 0), max((w - off_x) // k, 0)
    if oh == 0 or ow == 0:
        return np.empty((n, oh, ow), dtype=maps.dtype)
    window = maps[:, off_y : off_y + oh * k, off_x : off_x + ow * k]
    return window.reshape(n, oh, k, ow, k).max(axis=(2, 4))

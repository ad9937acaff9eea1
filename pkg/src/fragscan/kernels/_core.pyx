# cython: language_level=3
"""Compiled hot kernels: valid correlation and offset max-pooling.

The accumulation order per output position (bias, then input maps in index
order, then kernel rows, then kernel columns) matches kernels.pyref, and the
extension is compiled without FP contraction, so both backends produce
bit-identical results.
"""

import numpy as np


ctypedef fused floating:
    float
    double


def conv2d_valid(floating[:, :, ::1] maps, floating[:, :, :, ::1] kernels, floating[::1] bias):
    """Valid multi-channel correlation; see kernels.pyref.conv2d_valid."""
    cdef Py_ssize_t n_in = maps.shape[0], h = maps.shape[1], w = maps.shape[2]
    cdef Py_ssize_t n_out = kernels.shape[0], k = kernels.shape[2]
    if kernels.shape[1] != n_in:
        raise ValueError(f"kernels expect {kernels.shape[1]} input maps, got {n_in}")
    cdef Py_ssize_t oh = h - k + 1, ow = w - k + 1
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.empty((n_out, oh, ow), dtype=dtype)
    cdef floating[:, :, ::1] out = out_arr
    cdef Py_ssize_t o, y, x, c, i, j
    cdef floating acc
    with nogil:
        for o in range(n_out):
            for y in range(oh):
                for x in range(ow):
                    acc = bias[o]
                    for c in range(n_in):
                        for i in range(k):
                            for j in range(k):
                                acc = acc + kernels[o, c, i, j] * maps[c, y + i, x + j]
                    out[o, y, x] = acc
    return out_arr


def maxpool2d(floating[:, :, ::1] maps, Py_ssize_t k, Py_ssize_t off_x=0, Py_ssize_t off_y=0):
    """Offset max-pooling; see kernels.pyref.maxpool2d."""
    cdef Py_ssize_t n = maps.shape[0], h = maps.shape[1], w = maps.shape[2]
    cdef Py_ssize_t oh = (h - off_y) // k if h > off_y else 0
    cdef Py_ssize_t ow = (w - off_x) // k if w > off_x else 0
    dtype = np.float32 if floating is float else np.float64
    out_arr = np.empty((n, oh, ow), dtype=dtype)
    if oh == 0 or ow == 0:
        return out_arr
    cdef floating[:, :, ::1] out = out_arr
    cdef Py_ssize_t c, y, x, i, j, base_y, base_x
    cdef floating best, v
    with nogil:
        for c in range(n):
            for y in range(oh):
                base_y = off_y + y * k
                for x in range(ow):
                    base_x = off_x + x * k
                    best = maps[c, base_y, base_x]
                    for i in range(k):
                        for j in range(k):
                            v = maps[c, base_y + i, base_x + j]
                            if v > best:
                                best = v
                    out[c, y, x] = best
    return out_arr

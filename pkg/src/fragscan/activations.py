"""Pointwise nonlinearities shared by both scan engines."""

from __future__ import annotations

import numpy as np


def identity(x: np.ndarray) -> np.ndarray:
    return x


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def softmax(x: np.ndarray) -> np.ndarray:
    """Softmax across axis 0 (the class/plane axis); max-shifted for stability."""
    shifted = x - x.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


HIDDEN = {"identity": identity, "tanh": tanh, "relu": relu}
OUTPUT = {"identity": identity, "softmax": softmax}

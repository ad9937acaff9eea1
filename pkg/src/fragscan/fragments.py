"""Whole-image scanning with pooling-offset fragments.

Instead of re-running convolutions for every overlapping window, each conv
layer runs once over "extended maps" that cover the whole (padded) image.
Max-pooling breaks the window correspondence, so every pooling layer splits
each fragment into k^2 new ones — one per start offset in {0..k-1}^2 — and
the union of all fragments keeps data for every window.  The fully-connected
stack is then applied densely inside each fragment, and a final gather reads
every window's posterior from the unique fragment holding it.

Bookkeeping per fragment: map coordinate (mx, my) corresponds to the window
whose top-left pixel is (anchor_x + stride * mx, anchor_y + stride * my).
Pooling at offset (ox, oy) moves the anchor by (ox, oy) times the old stride
and multiplies the stride by k; conv layers and the fc stack leave both
untouched.

Fragments too small to hold even one window for the remaining layers are
dropped; they carry no needed data, and the gather verifies that every
requested window was produced exactly once.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .activations import identity
from .errors import CoverageError, LayerSizeError
from .netdef import NetSpec, WeightSet
from .patch import ConvStep, DenseOutput, Plan, PoolStep, build_plan, prepare_image
from .planes import Fragment, FragmentLayerState


@dataclass
class MacCounter:
    """Convolution multiply-accumulates actually executed, per conv layer.

    Counts convolutional layers only (not pooling, not the fc stack), which
    is the quantity the analytical cost model predicts.
    """

    by_layer: dict[int, int] = field(default_factory=dict)

    def add(self, layer: int, macs: int) -> None:
        self.by_layer[layer] = self.by_layer.get(layer, 0) + macs

    @property
    def total(self) -> int:
        return sum(self.by_layer.values())


def _map_fragments(fn: Callable, fragments: list[Fragment], executor: ThreadPoolExecutor | None) -> list:
    """Apply fn to each fragment, in order; fragments are independent, so
    results are identical with or without an executor."""
    if executor is None:
        return [fn(f) for f in fragments]
    return list(executor.map(fn, fragments))


def conv_forward_extended(
    state: FragmentLayerState,
    layer_kernels: np.ndarray,
    bias: np.ndarray,
    act: Callable[[np.ndarray], np.ndarray] = identity,
    counter: MacCounter | None = None,
    executor: ThreadPoolExecutor | None = None,
) -> FragmentLayerState:
    """One conv layer over every fragment's extended maps.

    Identical arithmetic to the per-patch layer; the fragment count and all
    anchors/strides are unchanged, and both map sides shrink by k - 1.
    """
    k = layer_kernels.shape[-1]
    layer = state.layer_index + 1
    keep = [f for f in state.fragments if f.height >= k and f.width >= k]
    if not keep:
        raise LayerSizeError(f"layer {layer}: no fragment is {k}x{k} or larger; image too small for this net")

    def one(fragment: Fragment) -> Fragment:
        out = act(kernels.conv2d_valid(fragment.maps, layer_kernels, bias))
        return Fragment(out, fragment.anchor_x, fragment.anchor_y, fragment.stride)

    result = _map_fragments(one, keep, executor)
    if counter is not None:
        n_out, n_in = layer_kernels.shape[0], layer_kernels.shape[1]
        positions = sum((f.height - k + 1) * (f.width - k + 1) for f in keep)
        counter.add(layer, positions * n_in * n_out * k * k)
    return FragmentLayerState(result, layer)


def pool_forward_fragment(
    state: FragmentLayerState,
    k: int,
    executor: ThreadPoolExecutor | None = None,
) -> FragmentLayerState:
    """One maxpool layer: each fragment spawns k^2 offset fragments.

    Offset (ox, oy) skips the ox leftmost columns and oy top rows, pools
    k x k blocks from there, and drops any trailing partial block, giving
    sides ((w - ox) // k, (h - oy) // k).  Offsets whose output would be
    empty are dropped.
    """
    layer = state.layer_index + 1

    def one(fragment: Fragment) -> list[Fragment]:
        produced = []
        for oy in range(k):
            for ox in range(k):
                pooled = kernels.maxpool2d(fragment.maps, k, ox, oy)
                if pooled.shape[1] == 0 or pooled.shape[2] == 0:
                    continue
                produced.append(
                    Fragment(
                        pooled,
                        fragment.anchor_x + ox * fragment.stride,
                        fragment.anchor_y + oy * fragment.stride,
                        fragment.stride * k,
                    )
                )
        return produced

    nested = _map_fragments(one, state.fragments, executor)
    flat = [fragment for produced in nested for fragment in produced]
    if not flat:
        raise LayerSizeError(f"layer {layer}: pooling by {k} leaves no data; image too small for this net")
    return FragmentLayerState(flat, layer)


def fc_forward_dense(
    state: FragmentLayerState,
    fc_steps: tuple[ConvStep, ...],
    window: int,
    executor: ThreadPoolExecutor | None = None,
) -> FragmentLayerState:
    """Apply the fully-connected stack densely inside each fragment.

    The first fc layer slides its window x window dot product over the maps
    (shrinking both sides by window - 1); the remaining fc layers act as 1x1
    dense maps.  Anchors and strides are unchanged.  Fragments smaller than
    the window hold no complete window and are dropped.
    """
    keep = [f for f in state.fragments if f.height >= window and f.width >= window]
    if not keep:
        raise LayerSizeError(
            f"no fragment is {window}x{window} or larger for the dense classifier; image too small"
        )

    def one(fragment: Fragment) -> Fragment:
        maps = fragment.maps
        for step in fc_steps:
            maps = step.act(kernels.conv2d_valid(maps, step.kernels, step.bias))
        return Fragment(maps, fragment.anchor_x, fragment.anchor_y, fragment.stride)

    result = _map_fragments(one, keep, executor)
    return FragmentLayerState(result, state.layer_index + len(fc_steps))


def reassemble(state: FragmentLayerState, out_w: int, out_h: int) -> DenseOutput:
    """Gather per-window outputs from all fragments into a dense map.

    Window (x, y) is read from the unique fragment with
    x = anchor_x (mod stride) and y = anchor_y (mod stride), at map
    coordinate ((x - anchor_x) / stride, (y - anchor_y) / stride).  Every
    requested position must be produced exactly once; anything else is an
    internal bookkeeping bug and raises CoverageError.
    """
    if not state.fragments:
        raise CoverageError("no fragments to reassemble")
    classes = state.fragments[0].count
    posteriors = np.empty((out_h, out_w, classes), dtype=state.fragments[0].maps.dtype)
    hits = np.zeros((out_h, out_w), dtype=np.uint16)
    for fragment in state.fragments:
        if fragment.count != classes:
            raise CoverageError(f"fragment plane counts differ: {fragment.count} vs {classes}")
        ax, ay, stride = fragment.anchor_x, fragment.anchor_y, fragment.stride
        if ax >= out_w or ay >= out_h:
            continue
        nx = min(fragment.width, (out_w - 1 - ax) // stride + 1)
        ny = min(fragment.height, (out_h - 1 - ay) // stride + 1)
        if nx <= 0 or ny <= 0:
            continue
        rows = slice(ay, ay + ny * stride, stride)
        cols = slice(ax, ax + nx * stride, stride)
        posteriors[rows, cols] = np.moveaxis(fragment.maps[:, :ny, :nx], 0, -1)
        hits[rows, cols] += 1
    if not (hits == 1).all():
        missing = np.argwhere(hits == 0)
        doubled = np.argwhere(hits > 1)
        detail = []
        if missing.size:
            detail.append(f"{len(missing)} position(s) never produced, first (y,x)={tuple(missing[0])}")
        if doubled.size:
            detail.append(f"{len(doubled)} position(s) produced more than once, first (y,x)={tuple(doubled[0])}")
        raise CoverageError("window coverage broken: " + "; ".join(detail))
    labels = posteriors.argmax(axis=2)
    return DenseOutput(out_w, out_h, posteriors, labels)


def iter_layer_states(
    net: NetSpec,
    weights: WeightSet,
    image: np.ndarray,
    pad: bool = False,
    counter: MacCounter | None = None,
    executor: ThreadPoolExecutor | None = None,
    plan: Plan | None = None,
) -> Iterator[FragmentLayerState]:
    """Yield the fragment state after layer 0 and after each spatial layer."""
    image = prepare_image(net, image, pad)
    plan = plan or build_plan(net, weights)
    state = FragmentLayerState([Fragment(image)], 0)
    yield state
    for step in plan.spatial:
        if isinstance(step, ConvStep):
            state = conv_forward_extended(state, step.kernels, step.bias, step.act, counter, executor)
        else:
            state = pool_forward_fragment(state, step.kernel, executor)
        yield state


def scan_fragment(
    net: NetSpec,
    weights: WeightSet,
    image: np.ndarray,
    pad: bool = False,
    threads: int = 1,
    counter: MacCounter | None = None,
) -> DenseOutput:
    """Classify every window via fragment propagation and reassembly.

    Same contract and output as scan_naive.  Fragments are data-independent,
    so `threads` > 1 processes them concurrently with bit-identical results.
    """
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    plan = build_plan(net, weights)
    w0 = net.window
    prepared = prepare_image(net, image, pad)
    out_h = prepared.shape[1] - w0 + 1
    out_w = prepared.shape[2] - w0 + 1
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        state = None
        for state in iter_layer_states(net, weights, prepared, False, counter, executor, plan):
            pass
        state = fc_forward_dense(state, plan.fc, plan.window, executor)
    finally:
        if executor is not None:
            executor.shutdown()
    return reassemble(state, out_w, out_h)

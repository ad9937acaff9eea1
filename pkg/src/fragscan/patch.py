"""Window-at-a-time scanning: the simple reference engine.

Every window of the image is cropped and forward-propagated independently.
This is deliberately the most straightforward implementation — no reuse of
work between overlapping windows — and serves as the correctness reference
for the fragment engine, which must reproduce its output within float
tolerance.

Both engines consume the same :class:`Plan` (dtype-cast weights, resolved
activations, fully-connected layers expressed as window dot products), so
per-window arithmetic is identical between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import kernels
from .activations import HIDDEN, OUTPUT, identity
from .errors import LayerSizeError, WeightFileError
from .imageio import mirror_pad
from .netdef import NetSpec, WeightSet, weight_shapes
from .planes import crop, float_dtype


@dataclass(frozen=True)
class ConvStep:
    layer: int
    kernels: np.ndarray  # (out, in, k, k), active dtype
    bias: np.ndarray  # (out,)
    act: Callable[[np.ndarray], np.ndarray]

    @property
    def kernel(self) -> int:
        return self.kernels.shape[-1]


@dataclass(frozen=True)
class PoolStep:
    layer: int
    kernel: int


@dataclass(frozen=True)
class Plan:
    """Per-scan execution plan: spatial steps, then the fc stack.

    Fully-connected layers are carried as conv-shaped kernels — the first
    over a ``window x window`` area, the rest over 1x1 — which makes their
    accumulation order identical to flattening plane-major, row-major.
    """

    spatial: tuple[ConvStep | PoolStep, ...]
    fc: tuple[ConvStep, ...]
    window: int  # map side consumed by the first fc step
    classes: int


def build_plan(net: NetSpec, weights: WeightSet) -> Plan:
    dtype = float_dtype()
    shapes = weight_shapes(net)
    hidden = HIDDEN[net.hidden_activation]
    output = OUTPUT[net.output_activation]

    def cast(index: int, conv_shape: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
        lw = weights.by_layer.get(index)
        if lw is None:
            raise WeightFileError(f"no weights for layer {index}")
        if lw.values.shape != shapes[index][0]:
            raise WeightFileError(
                f"layer {index}: weights shaped {lw.values.shape}, net needs {shapes[index][0]}"
            )
        values = np.ascontiguousarray(lw.values.reshape(conv_shape), dtype=dtype)
        return values, np.ascontiguousarray(lw.bias, dtype=dtype)

    spatial: list[ConvStep | PoolStep] = []
    for index, spec in enumerate(net.layers[1 : net.last_spatial + 1], 1):
        if spec.kind == "conv":
            values, bias = cast(index, shapes[index][0])
            spatial.append(ConvStep(index, values, bias, hidden))
        else:
            spatial.append(PoolStep(index, spec.kernel))

    window = net.classifier_window
    fc_specs = net.fc_layers()
    fc: list[ConvStep] = []
    in_maps = net.maps_at(net.last_spatial)
    for position, (index, spec) in enumerate(fc_specs):
        side = window if position == 0 else 1
        values, bias = cast(index, (spec.map_count, in_maps, side, side))
        act = output if position == len(fc_specs) - 1 else hidden
        fc.append(ConvStep(index, values, bias, act))
        in_maps = spec.map_count
    return Plan(tuple(spatial), tuple(fc), window, net.classes)


def conv_forward_patch(
    maps: np.ndarray,
    layer_kernels: np.ndarray,
    bias: np.ndarray,
    act: Callable[[np.ndarray], np.ndarray] = identity,
) -> np.ndarray:
    """One conv layer on a map set: valid correlation, bias, activation."""
    k = layer_kernels.shape[-1]
    if maps.shape[-2] < k or maps.shape[-1] < k:
        raise LayerSizeError(f"maps {maps.shape[-1]}x{maps.shape[-2]} smaller than kernel {k}")
    return act(kernels.conv2d_valid(maps, layer_kernels, bias))


def maxpool_forward_patch(maps: np.ndarray, k: int) -> np.ndarray:
    """One maxpool layer; map sides must be divisible by k."""
    n, h, w = maps.shape
    if h % k != 0 or w % k != 0:
        raise LayerSizeError(f"maps {w}x{h} not divisible by pooling kernel {k}")
    return kernels.maxpool2d(maps, k)


def fc_forward(
    vector: np.ndarray,
    matrix: np.ndarray,
    bias: np.ndarray,
    act: Callable[[np.ndarray], np.ndarray] = identity,
) -> np.ndarray:
    """One fully-connected layer on a flat vector: act(matrix @ vector + bias).

    Routed through the conv kernel (input treated as length x 1 x 1 maps) so
    the accumulation order matches the dense sliding form exactly.
    """
    if vector.ndim != 1 or matrix.shape[1] != vector.size:
        raise LayerSizeError(f"fc expects a vector of length {matrix.shape[1]}, got shape {vector.shape}")
    maps = np.ascontiguousarray(vector, dtype=vector.dtype).reshape(vector.size, 1, 1)
    shaped = np.ascontiguousarray(matrix).reshape(matrix.shape[0], vector.size, 1, 1)
    return act(kernels.conv2d_valid(maps, shaped, bias))[:, 0, 0]


def _run_plan(plan: Plan, maps: np.ndarray) -> np.ndarray:
    for step in plan.spatial:
        if isinstance(step, ConvStep):
            maps = step.act(kernels.conv2d_valid(maps, step.kernels, step.bias))
        else:
            maps = kernels.maxpool2d(maps, step.kernel)
    for step in plan.fc:
        maps = step.act(kernels.conv2d_valid(maps, step.kernels, step.bias))
    return maps[:, 0, 0]


def iter_patch_maps(net: NetSpec, weights: WeightSet, patch: np.ndarray) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (layer_index, maps) after each spatial layer of one patch."""
    plan = build_plan(net, weights)
    maps = prepare_patch(net, patch)
    yield 0, maps
    for step in plan.spatial:
        if isinstance(step, ConvStep):
            maps = step.act(kernels.conv2d_valid(maps, step.kernels, step.bias))
        else:
            maps = kernels.maxpool2d(maps, step.kernel)
        yield step.layer, maps


def prepare_patch(net: NetSpec, patch: np.ndarray) -> np.ndarray:
    dtype = float_dtype()
    patch = np.asarray(patch)
    if patch.ndim == 2:
        patch = patch[None]
    expected = (net.input_channels, net.window, net.window)
    if patch.shape != expected:
        raise LayerSizeError(f"patch must be {expected}, got {patch.shape}")
    return np.ascontiguousarray(patch, dtype=dtype)


def forward_patch(net: NetSpec, weights: WeightSet, patch: np.ndarray) -> np.ndarray:
    """Class posterior vector for a single window-sized patch."""
    return _run_plan(build_plan(net, weights), prepare_patch(net, patch))


@dataclass
class DenseOutput:
    """Per-window class posteriors over a scanned image."""

    width: int
    height: int
    posteriors: np.ndarray  # (height, width, classes)
    labels: np.ndarray  # (height, width) argmax indices; ties -> lowest class

    @property
    def classes(self) -> int:
        return self.posteriors.shape[2]


def prepare_image(net: NetSpec, image: np.ndarray, pad: bool) -> np.ndarray:
    """Validate channels/size and apply mirror padding when requested."""
    dtype = float_dtype()
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[None]
    if image.ndim != 3 or image.shape[0] != net.input_channels:
        raise LayerSizeError(f"image must provide {net.input_channels} channel plane(s), got shape {image.shape}")
    image = np.ascontiguousarray(image, dtype=dtype)
    w0 = net.window
    if pad:
        if w0 % 2 == 0:
            raise LayerSizeError(f"padded scans need an odd window, got {w0}")
        image = np.ascontiguousarray(mirror_pad(image, (w0 - 1) // 2))
    if image.shape[1] < w0 or image.shape[2] < w0:
        raise LayerSizeError(f"image {image.shape[2]}x{image.shape[1]} smaller than the {w0}-pixel window")
    return image


def scan_naive(net: NetSpec, weights: WeightSet, image: np.ndarray, pad: bool = False) -> DenseOutput:
    """Classify every window by evaluating each one independently.

    Without padding the output is (W - w0 + 1) x (H - w0 + 1) and position
    (x, y) is the posterior of the window with top-left (x, y); with mirror
    padding the output matches the image and (x, y) is classified by the
    window centered on it.
    """
    image = prepare_image(net, image, pad)
    w0 = net.window
    plan = build_plan(net, weights)
    out_h = image.shape[1] - w0 + 1
    out_w = image.shape[2] - w0 + 1
    posteriors = np.empty((out_h, out_w, plan.classes), dtype=image.dtype)
    for y in range(out_h):
        for x in range(out_w):
            posteriors[y, x] = _run_plan(plan, crop(image, x, y, w0, w0))
    labels = posteriors.argmax(axis=2)
    return DenseOutput(out_w, out_h, posteriors, labels)

"""Network architecture description, validation, and synthetic weights.

The text format is one layer per line with ``#`` comments::

    input <channels> <window>     # first line; window = patch side in pixels
    conv <maps> <kernel>
    maxpool <kernel>
    fc <neurons>
    activation <hidden> <output>  # optional; defaults: tanh softmax

Validation computes the per-layer patch map size: a conv layer shrinks it by
``kernel - 1``; a maxpool layer divides it by ``kernel`` and requires exact
divisibility.  Spatial (conv/maxpool) layers must all precede the
fully-connected layers, and at least one fc layer must be present to define
the output classes.

Weight file format "FSW1": the 4 magic bytes, then for each parameterized
layer in network order: layer index (u32 LE), value count (u64 LE), raw
float32 LE values.  Conv kernels are stored output-map major, input-map
next, then row-major within the kernel; biases follow the kernels.  Fully
connected layers store the (out x in) matrix row-major, then the biases.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NetParseError, WeightFileError
from .rng import XorShift64Star

WEIGHT_MAGIC = b"FSW1"

HIDDEN_ACTIVATIONS = ("identity", "tanh", "relu")
OUTPUT_ACTIVATIONS = ("identity", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    """One line of the architecture: kind plus its size parameters."""

    kind: str  # "input" | "conv" | "maxpool" | "fc"
    map_count: int = 0  # conv: output maps; fc: neurons; input: channels
    kernel: int = 0  # conv / maxpool kernel side; unused otherwise


@dataclass(frozen=True)
class NetSpec:
    """A validated architecture with precomputed patch-level map sizes."""

    layers: tuple[LayerSpec, ...]
    patch_sizes: tuple[int, ...]  # map side at layers 0..last_spatial
    last_spatial: int  # index of the last conv/maxpool layer
    hidden_activation: str = "tanh"
    output_activation: str = "softmax"

    @property
    def input_channels(self) -> int:
        return self.layers[0].map_count

    @property
    def window(self) -> int:
        """Side of the square input patch (the scan window)."""
        return self.patch_sizes[0]

    @property
    def classifier_window(self) -> int:
        """Map side entering the first fully-connected layer."""
        return self.patch_sizes[self.last_spatial]

    @property
    def classes(self) -> int:
        return self.layers[-1].map_count

    def maps_at(self, layer_index: int) -> int:
        """Number of maps output by spatial layer `layer_index` (0 = input)."""
        count = self.input_channels
        for spec in self.layers[1 : layer_index + 1]:
            if spec.kind == "conv":
                count = spec.map_count
        return count

    def fc_layers(self) -> list[tuple[int, LayerSpec]]:
        return [(l, s) for l, s in enumerate(self.layers) if s.kind == "fc"]


def parse_net(text: str) -> NetSpec:
    """Parse and validate a network description; see the module docstring."""
    layers: list[LayerSpec] = []
    hidden, output = "tanh", "softmax"
    size: int | None = None
    sizes: list[int] = []
    saw_fc = False
    saw_activation = False

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        keyword, args = parts[0], parts[1:]

        def want(n: int) -> list[int]:
            if len(args) != n:
                raise NetParseError(f"line {lineno}: '{keyword}' takes {n} argument(s), got {len(args)}")
            try:
                return [int(a) for a in args]
            except ValueError:
                raise NetParseError(f"line {lineno}: non-integer argument in {line!r}") from None

        if keyword == "input":
            if layers:
                raise NetParseError(f"line {lineno}: 'input' must be the first layer")
            channels, size = want(2)
            if channels < 1 or size < 1:
                raise NetParseError(f"line {lineno}: input needs channels >= 1 and size >= 1")
            layers.append(LayerSpec("input", channels))
            sizes.append(size)
        elif keyword == "activation":
            if len(args) != 2:
                raise NetParseError(f"line {lineno}: 'activation' takes <hidden> <output>")
            if saw_activation:
                raise NetParseError(f"line {lineno}: duplicate 'activation' line")
            hidden, output = args
            if hidden not in HIDDEN_ACTIVATIONS:
                raise NetParseError(f"line {lineno}: hidden activation {hidden!r} not in {HIDDEN_ACTIVATIONS}")
            if output not in OUTPUT_ACTIVATIONS:
                raise NetParseError(f"line {lineno}: output activation {output!r} not in {OUTPUT_ACTIVATIONS}")
            saw_activation = True
        elif keyword in ("conv", "maxpool", "fc"):
            if not layers:
                raise NetParseError(f"line {lineno}: network must start with an 'input' line")
            index = len(layers)
            if keyword == "conv":
                maps, kernel = want(2)
                if saw_fc:
                    raise NetParseError(f"line {lineno}: conv layer {index} after a fully-connected layer")
                if maps < 1 or kernel < 1:
                    raise NetParseError(f"line {lineno}: conv needs maps >= 1 and kernel >= 1")
                size = size - (kernel - 1)
                if size < 1:
                    raise NetParseError(
                        f"layer {index}: conv kernel {kernel} shrinks the {sizes[-1]}-pixel map below 1"
                    )
                layers.append(LayerSpec("conv", maps, kernel))
                sizes.append(size)
            elif keyword == "maxpool":
                (kernel,) = want(1)
                if saw_fc:
                    raise NetParseError(f"line {lineno}: maxpool layer {index} after a fully-connected layer")
                if kernel < 2:
                    raise NetParseError(f"line {lineno}: maxpool needs kernel >= 2")
                if size % kernel != 0:
                    raise NetParseError(f"layer {index}: mod({size},{kernel}) != 0, cannot maxpool")
                size //= kernel
                layers.append(LayerSpec("maxpool", 0, kernel))
                sizes.append(size)
            else:  # fc
                (neurons,) = want(1)
                if neurons < 1:
                    raise NetParseError(f"line {lineno}: fc needs neurons >= 1")
                layers.append(LayerSpec("fc", neurons))
                saw_fc = True
        else:
            raise NetParseError(f"line {lineno}: unknown keyword {keyword!r}")

    if not layers:
        raise NetParseError("empty network description")
    if not saw_fc:
        raise NetParseError("network must end with at least one fully-connected layer")
    last_spatial = len(sizes) - 1
    return NetSpec(tuple(layers), tuple(sizes), last_spatial, hidden, output)


def serialize_net(net: NetSpec) -> str:
    """Render a NetSpec back into the text format (parse round-trips)."""
    lines = [f"input {net.input_channels} {net.window}"]
    for spec in net.layers[1:]:
        if spec.kind == "conv":
            lines.append(f"conv {spec.map_count} {spec.kernel}")
        elif spec.kind == "maxpool":
            lines.append(f"maxpool {spec.kernel}")
        else:
            lines.append(f"fc {spec.map_count}")
    lines.append(f"activation {net.hidden_activation} {net.output_activation}")
    return "\n".join(lines) + "\n"


def load_net(path: str | Path) -> NetSpec:
    return parse_net(Path(path).read_text())


def fragment_count(net: NetSpec, layer_index: int) -> int:
    """Fragments alive after `layer_index`: the product of the squared
    kernel sizes of all maxpool layers up to and including it."""
    if not 0 <= layer_index <= net.last_spatial:
        raise IndexError(f"layer {layer_index} outside spatial range 0..{net.last_spatial}")
    count = 1
    for spec in net.layers[1 : layer_index + 1]:
        if spec.kind == "maxpool":
            count *= spec.kernel**2
    return count


@dataclass(frozen=True)
class LayerWeights:
    """Kernel/matrix values plus biases for one parameterized layer."""

    values: np.ndarray  # conv: (out, in, k, k); fc: (out, in); float32
    bias: np.ndarray  # (out,) float32

    @property
    def size(self) -> int:
        return self.values.size + self.bias.size


@dataclass(frozen=True)
class WeightSet:
    """All parameterized layers' weights, keyed by layer index."""

    by_layer: dict[int, LayerWeights]

    @property
    def value_count(self) -> int:
        return sum(lw.size for lw in self.by_layer.values())

    def mean(self) -> float:
        total = sum(float(lw.values.sum(dtype=np.float64)) + float(lw.bias.sum(dtype=np.float64)) for lw in self.by_layer.values())
        return total / self.value_count


def weight_shapes(net: NetSpec) -> dict[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    """Expected (values, bias) shapes per parameterized layer, in net order."""
    shapes: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {}
    maps = net.input_channels
    features = None
    for index, spec in enumerate(net.layers[1:], 1):
        if spec.kind == "conv":
            shapes[index] = ((spec.map_count, maps, spec.kernel, spec.kernel), (spec.map_count,))
            maps = spec.map_count
        elif spec.kind == "fc":
            if features is None:
                features = maps * net.classifier_window**2
            shapes[index] = ((spec.map_count, features), (spec.map_count,))
            features = spec.map_count
    return shapes


def init_weights(net: NetSpec, seed: int) -> WeightSet:
    """Deterministic synthetic weights, uniform in [-0.5, 0.5).

    Values are drawn in file order (kernels, then biases, layer by layer)
    from :class:`XorShift64Star`, so the same seed produces a bit-identical
    WeightSet on every platform.
    """
    rng = XorShift64Star(seed)
    by_layer: dict[int, LayerWeights] = {}
    for index, (vshape, bshape) in weight_shapes(net).items():
        n_values = int(np.prod(vshape))
        n_bias = int(np.prod(bshape))
        flat = rng.centered_f32(n_values + n_bias)
        by_layer[index] = LayerWeights(flat[:n_values].reshape(vshape), flat[n_values:])
    return WeightSet(by_layer)


def save_weights(weights: WeightSet, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(WEIGHT_MAGIC)
        for index in sorted(weights.by_layer):
            lw = weights.by_layer[index]
            flat = np.concatenate([lw.values.ravel(), lw.bias]).astype("<f4")
            fh.write(struct.pack("<I", index))
            fh.write(struct.pack("<Q", flat.size))
            fh.write(flat.tobytes())


def load_weights(path: str | Path, net: NetSpec) -> WeightSet:
    """Read an FSW1 file and validate it against the network's shapes."""
    data = Path(path).read_bytes()
    if data[:4] != WEIGHT_MAGIC:
        raise WeightFileError(f"{path}: bad magic {data[:4]!r}, expected {WEIGHT_MAGIC!r}")
    shapes = weight_shapes(net)
    by_layer: dict[int, LayerWeights] = {}
    pos = 4
    while pos < len(data):
        if pos + 12 > len(data):
            raise WeightFileError(f"{path}: truncated layer header at byte {pos}")
        (index,) = struct.unpack_from("<I", data, pos)
        (count,) = struct.unpack_from("<Q", data, pos + 4)
        pos += 12
        if index not in shapes:
            raise WeightFileError(f"{path}: layer {index} is not a parameterized layer of this net")
        if index in by_layer:
            raise WeightFileError(f"{path}: duplicate entry for layer {index}")
        vshape, bshape = shapes[index]
        expected = int(np.prod(vshape)) + int(np.prod(bshape))
        if count != expected:
            raise WeightFileError(f"{path}: layer {index} holds {count} values, net needs {expected}")
        end = pos + 4 * count
        if end > len(data):
            raise WeightFileError(f"{path}: truncated values for layer {index}")
        flat = np.frombuffer(data[pos:end], dtype="<f4").astype(np.float32)
        n_values = int(np.prod(vshape))
        by_layer[index] = LayerWeights(flat[:n_values].reshape(vshape), flat[n_values:])
        pos = end
    missing = sorted(set(shapes) - set(by_layer))
    if missing:
        raise WeightFileError(f"{path}: missing weights for layer(s) {missing}")
    return WeightSet(by_layer)

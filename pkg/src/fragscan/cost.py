"""Analytical operation counts for both scan strategies.

Reports cover convolutional layers by default — they dominate the
arithmetic, and pooling is comparatively free (its optional rows count
k^2 - 1 comparisons per pooled pixel).  Conv counts use the convention of
2 FLOPS per kernel tap (one multiply, one add).

Two flavors of the image-based count:

* mode "paper" reproduces the published comparison table: the input side is
  taken as s + (w0 - 1) / 2, every fragment is assumed to share one size per
  layer, that size is floor-divided by k at each pooling layer and left
  unchanged by conv layers, and each conv layer is charged
  ``size^2 * maps_in * maps_out * fragments * k^2 * 2``.
* mode "exact" replays the fragment engine's true per-fragment size
  bookkeeping (including dropped fragments and the actual padding) and
  equals exactly twice the engine's instrumented multiply-accumulate count.

The patch-based count charges ``windows * maps_in * maps_out * w_l^2 * k^2
* 2`` per conv layer; in "paper" mode the window count is s^2 (a window per
image pixel, the padded setting), in "exact" mode it is the true
(s_padded - w0 + 1)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import LayerSizeError
from .netdef import NetSpec

MODES = ("paper", "exact")


@dataclass(frozen=True)
class LayerCost:
    """One layer's cost under both strategies.

    Conv rows count 2 FLOPS per kernel tap; pooling rows (included only on
    request) count k^2 - 1 comparisons per pooled output pixel.
    """

    layer: int
    size_in: int  # per-fragment map side entering the layer (largest, in exact mode)
    maps_in: int
    maps_out: int
    patch_map: int  # patch-level output map side w_l
    kernel: int
    fragments: int
    flops_patch: int
    flops_image: int
    kind: str = "conv"  # "conv" | "pool"

    @property
    def speedup(self) -> float:
        return self.flops_patch / self.flops_image


@dataclass(frozen=True)
class CostReport:
    mode: str
    image_size: int
    rows: tuple[LayerCost, ...]

    @property
    def total_patch(self) -> int:
        return sum(r.flops_patch for r in self.rows)

    @property
    def total_image(self) -> int:
        return sum(r.flops_image for r in self.rows)

    @property
    def total_speedup(self) -> float:
        if self.total_image == 0:
            return float("nan")
        return self.total_patch / self.total_image

    def render_text(self) -> str:
        """Aligned table in units of 10^9 FLOPS.

        Formatting follows the published table: patch counts and speedups
        are truncated (floor), image counts rounded to one decimal.
        """
        header = (
            f"{'layer':>5} {'s_in':>6} {'maps_in':>8} {'maps_out':>9} {'w':>4} {'k':>3} "
            f"{'frags':>6} {'patch[1e9]':>11} {'image[1e9]':>11} {'speedup':>9}"
        )
        lines = [f"mode: {self.mode}  image: {self.image_size}x{self.image_size}", header]
        if not self.rows:
            return lines[0] + "\nno costed layers (network has no convolutional layers)"
        for r in self.rows:
            label = f"{r.layer}p" if r.kind == "pool" else f"{r.layer}"
            lines.append(
                f"{label:>5} {r.size_in:>6} {r.maps_in:>8} {r.maps_out:>9} {r.patch_map:>4} {r.kernel:>3} "
                f"{r.fragments:>6} {r.flops_patch // 10**9:>11} {r.flops_image / 1e9:>11.1f} "
                f"{_trunc1(r.speedup):>9.1f}"
            )
        lines.append(
            f"{'total':>5} {'':>6} {'':>8} {'':>9} {'':>4} {'':>3} {'':>6} "
            f"{self.total_patch // 10**9:>11} {self.total_image / 1e9:>11.1f} {_trunc1(self.total_speedup):>9.1f}"
        )
        lines.append(f"raw totals: patch={self.total_patch} image={self.total_image} FLOPS")
        return "\n".join(lines)

    def render_csv(self) -> str:
        lines = ["layer,s_in,maps_in,maps_out,w,k,fragments,flops_patch,flops_image,speedup"]
        for r in self.rows:
            label = f"{r.layer}p" if r.kind == "pool" else f"{r.layer}"
            lines.append(
                f"{label},{r.size_in},{r.maps_in},{r.maps_out},{r.patch_map},{r.kernel},"
                f"{r.fragments},{r.flops_patch},{r.flops_image},{r.speedup!r}"
            )
        lines.append(f"total,,,,,,,{self.total_patch},{self.total_image},{self.total_speedup!r}")
        return "\n".join(lines) + "\n"


def _trunc1(x: float) -> float:
    return math.floor(x * 10.0) / 10.0


def _padded_side(net: NetSpec, s: int, pad: bool) -> int:
    if not pad:
        return s
    if net.window % 2 == 0:
        raise LayerSizeError(f"padded cost model needs an odd window, got {net.window}")
    return s + net.window - 1


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def _paper_rows(net: NetSpec, s: int) -> list[tuple]:
    """(layer, kind, size_in, maps_in, maps_out, kernel, fragments,
    flops_image) per layer, under the shared-fragment-size approximation."""
    size = s + (net.window - 1) // 2
    maps = net.input_channels
    fragments = 1
    rows = []
    for index, spec in enumerate(net.layers[1 : net.last_spatial + 1], 1):
        k = spec.kernel
        if spec.kind == "conv":
            flops = size * size * maps * spec.map_count * fragments * k * k * 2
            rows.append((index, "conv", size, maps, spec.map_count, k, fragments, flops))
            maps = spec.map_count
        else:
            size_in = size
            size //= k
            fragments *= k**2
            compares = size * size * maps * fragments * (k * k - 1)
            rows.append((index, "pool", size_in, maps, maps, k, fragments, compares))
    return rows


def _exact_rows(net: NetSpec, s: int, pad: bool) -> list[tuple]:
    """Same row tuples as _paper_rows but from the true size bookkeeping.

    Mirrors the engine exactly: fragments smaller than the kernel are
    dropped at conv layers, pooling offsets with empty output are dropped;
    a conv row's flops_image is 2 * the engine's multiply-accumulate count.
    """
    side = _padded_side(net, s, pad)
    if side < net.window:
        raise LayerSizeError(f"image side {s} smaller than the {net.window}-pixel window")
    sizes: list[tuple[int, int]] = [(side, side)]  # (w, h) per live fragment
    maps = net.input_channels
    rows = []
    for index, spec in enumerate(net.layers[1 : net.last_spatial + 1], 1):
        k = spec.kernel
        size_in = max((w for (w, _) in sizes), default=0)
        if spec.kind == "conv":
            keep = [(w, h) for (w, h) in sizes if w >= k and h >= k]
            positions = sum((w - k + 1) * (h - k + 1) for (w, h) in keep)
            macs = positions * maps * spec.map_count * k * k
            rows.append((index, "conv", size_in, maps, spec.map_count, k, len(keep), 2 * macs))
            sizes = [(w - k + 1, h - k + 1) for (w, h) in keep]
            maps = spec.map_count
        else:
            pooled = []
            for (w, h) in sizes:
                for oy in range(k):
                    for ox in range(k):
                        pw, ph = (w - ox) // k, (h - oy) // k
                        if pw > 0 and ph > 0:
                            pooled.append((pw, ph))
            compares = sum(w * h for (w, h) in pooled) * maps * (k * k - 1)
            rows.append((index, "pool", size_in, maps, maps, k, len(pooled), compares))
            sizes = pooled
    return rows


def _rows(net: NetSpec, s: int, mode: str, pad: bool, include_pool: bool = False) -> list[tuple]:
    rows = _paper_rows(net, s) if mode == "paper" else _exact_rows(net, s, pad)
    if include_pool:
        return rows
    return [row for row in rows if row[1] == "conv"]


def _window_count(net: NetSpec, s: int, mode: str, pad: bool) -> int:
    if mode == "paper":
        return s * s
    side = _padded_side(net, s, pad) - net.window + 1
    if side < 1:
        raise LayerSizeError(f"image side {s} smaller than the {net.window}-pixel window")
    return side * side


def _patch_count(net: NetSpec, windows: int, layer: int, kind: str, maps_in: int, maps_out: int, k: int) -> int:
    w_l = net.patch_sizes[layer]
    if kind == "conv":
        return windows * maps_in * maps_out * w_l * w_l * k * k * 2
    return windows * maps_in * w_l * w_l * (k * k - 1)


def flops_patch(net: NetSpec, s: int, mode: str = "paper", pad: bool = True) -> dict[int, int]:
    """Patch-strategy FLOPS per conv layer for an s x s image scan."""
    _check_mode(mode)
    windows = _window_count(net, s, mode, pad)
    return {
        layer: _patch_count(net, windows, layer, kind, maps_in, maps_out, k)
        for layer, kind, _, maps_in, maps_out, k, _, _ in _rows(net, s, mode, pad)
    }


def flops_image(net: NetSpec, s: int, mode: str = "paper", pad: bool = True) -> dict[int, int]:
    """Image-strategy FLOPS per conv layer; see the module docstring."""
    _check_mode(mode)
    return {layer: flops for layer, _, _, _, _, _, _, flops in _rows(net, s, mode, pad)}


def speedup_report(
    net: NetSpec, s: int, mode: str = "paper", pad: bool = True, include_pool: bool = False
) -> CostReport:
    """Per-layer and total cost comparison between the two strategies.

    Pooling rows are excluded by default (convolutions dominate);
    include_pool adds their comparison counts for completeness.
    """
    _check_mode(mode)
    windows = _window_count(net, s, mode, pad)
    rows = [
        LayerCost(
            layer,
            size_in,
            maps_in,
            maps_out,
            net.patch_sizes[layer],
            k,
            frags,
            _patch_count(net, windows, layer, kind, maps_in, maps_out, k),
            flops,
            kind,
        )
        for layer, kind, size_in, maps_in, maps_out, k, frags, flops in _rows(net, s, mode, pad, include_pool)
    ]
    return CostReport(mode, s, tuple(rows))

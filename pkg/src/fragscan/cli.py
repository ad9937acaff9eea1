"""Command-line entry point.

Subcommands: segment (write a class-index PGM), verify (cross-check the two
engines), flops (analytical cost report), bench (wall-clock comparison of
the engines, optionally across kernel backends), init-weights (write a
seeded FSW1 file), make-image (deterministic synthetic PGM fixture).

Exit codes: 0 success, 1 the verify diff exceeded its tolerance, 2
operational error (bad file, bad arguments, size violation).
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import kernels
from .cost import MODES, speedup_report
from .errors import FragscanError
from .fragments import scan_fragment
from .imageio import read_pgm, save_posteriors, synthetic_slice, write_class_map, write_pgm
from .netdef import init_weights, load_net, load_weights, save_weights
from .patch import scan_naive
from .planes import planes_equal, precision


@dataclass
class RunConfig:
    """Validated knobs shared by the commands."""

    command: str
    net: Path | None = None
    weights: Path | None = None
    image: Path | None = None
    seed: int = 0
    pad: bool = False
    precision: str = "f32"
    tolerance: float | None = None
    out: Path | None = None
    posteriors: Path | None = None
    csv: Path | None = None
    size: int = 0
    runs: int = 5
    threads: int = 1
    mode: str = "paper"
    include_pool: bool = False
    backend: str = "active"

    def __post_init__(self) -> None:
        if self.tolerance is not None and self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        fields = {k: v for k, v in vars(args).items() if k in cls.__dataclass_fields__}
        return cls(**fields)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fragscan", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func, command=name)
        return p

    p = add("segment", cmd_segment, "classify every pixel/window of an image")
    p.add_argument("--net", type=Path, required=True)
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--pad", action="store_true", help="mirror-pad so every pixel gets a centered window")
    p.add_argument("--out", type=Path, help="class-index PGM (default: <image>_classes.pgm)")
    p.add_argument("--posteriors", type=Path, help="also dump the raw posterior volume (FSP1)")
    p.add_argument("--threads", type=_positive_int, default=1)

    p = add("verify", cmd_verify, "run both engines and compare outputs")
    p.add_argument("--net", type=Path, required=True)
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--pad", action="store_true")
    p.add_argument("--tol", dest="tolerance", type=float, help="max |diff| allowed (default 1e-5, or 1e-12 with --f64)")
    p.add_argument("--f64", action="store_true", help="verify in float64")
    p.add_argument("--threads", type=_positive_int, default=1)

    p = add("flops", cmd_flops, "analytical cost report for both strategies")
    p.add_argument("--net", type=Path, required=True)
    p.add_argument("--size", type=_positive_int, required=True, help="square image side in pixels")
    p.add_argument("--mode", choices=MODES, default="paper")
    p.add_argument("--pad", action="store_true", help="exact mode: account for mirror padding")
    p.add_argument("--pool", dest="include_pool", action="store_true", help="include max-pooling comparison rows")
    p.add_argument("--csv", type=Path, help="also write machine-readable rows")

    p = add("bench", cmd_bench, "median wall-clock of both engines on a synthetic image")
    p.add_argument("--net", type=Path, required=True)
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--size", type=_positive_int, required=True)
    p.add_argument("--runs", type=_positive_int, default=5)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pad", action="store_true")
    p.add_argument("--posteriors", type=Path, help="dump the fragment engine's posterior volume")
    p.add_argument(
        "--backend",
        choices=["active", "compiled", "python", "both"],
        default="active",
        help="kernel backend(s) to time (default: whichever is active)",
    )

    p = add("init-weights", cmd_init_weights, "write deterministic synthetic weights (FSW1)")
    p.add_argument("--net", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = add("make-image", cmd_make_image, "write a deterministic synthetic grayscale PGM")
    p.add_argument("--size", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    return parser


def cmd_segment(cfg: RunConfig) -> int:
    net = load_net(cfg.net)
    weights = load_weights(cfg.weights, net)
    image = read_pgm(cfg.image)
    dense = scan_fragment(net, weights, image, pad=cfg.pad, threads=cfg.threads)
    out = cfg.out or cfg.image.with_name(cfg.image.stem + "_classes.pgm")
    write_class_map(out, dense.labels, dense.classes)
    if cfg.posteriors:
        save_posteriors(cfg.posteriors, dense.posteriors)
    print(f"segmented {dense.width}x{dense.height} windows into {dense.classes} classes -> {out}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    tol = cfg.tolerance if cfg.tolerance is not None else (1e-12 if cfg.precision == "f64" else 1e-5)
    with precision(cfg.precision):
        net = load_net(cfg.net)
        weights = load_weights(cfg.weights, net)
        image = read_pgm(cfg.image)

        start = time.perf_counter()
        naive = scan_naive(net, weights, image, pad=cfg.pad)
        naive_s = time.perf_counter() - start
        start = time.perf_counter()
        fragd = scan_fragment(net, weights, image, pad=cfg.pad, threads=cfg.threads)
        frag_s = time.perf_counter() - start

    report = planes_equal(naive.posteriors, fragd.posteriors, tol)
    print(f"naive:    {naive_s:9.3f} s")
    print(f"fragment: {frag_s:9.3f} s")
    print(f"{report.message}")
    if not report.equal:
        print("verify: engines disagree", file=sys.stderr)
        return 1
    print("verify: engines agree")
    return 0


def cmd_flops(cfg: RunConfig) -> int:
    net = load_net(cfg.net)
    report = speedup_report(net, cfg.size, mode=cfg.mode, pad=cfg.pad, include_pool=cfg.include_pool)
    print(report.render_text())
    if cfg.csv:
        cfg.csv.write_text(report.render_csv())
    return 0


def _bench_once(engine, *args, **kwargs) -> float:
    start = time.perf_counter()
    engine(*args, **kwargs)
    return time.perf_counter() - start


def cmd_bench(cfg: RunConfig) -> int:
    net = load_net(cfg.net)
    weights = load_weights(cfg.weights, net)
    image = synthetic_slice(cfg.size, seed=cfg.seed)
    if cfg.backend == "both":
        names = kernels.available_backends()
    elif cfg.backend == "active":
        names = [kernels.backend_name()]
    else:
        if cfg.backend not in kernels.available_backends():
            raise FragscanError(f"backend {cfg.backend!r} is not available (extension not built?)")
        names = [cfg.backend]
    for name in names:
        with kernels.backend(name):
            # warm-up pass excluded from timing
            scan_naive(net, weights, image, pad=cfg.pad)
            dense = scan_fragment(net, weights, image, pad=cfg.pad, threads=cfg.threads)
            naive_times = [_bench_once(scan_naive, net, weights, image, pad=cfg.pad) for _ in range(cfg.runs)]
            frag_times = [
                _bench_once(scan_fragment, net, weights, image, pad=cfg.pad, threads=cfg.threads)
                for _ in range(cfg.runs)
            ]
        naive_med = statistics.median(naive_times)
        frag_med = statistics.median(frag_times)
        print(f"backend={name} image={cfg.size}x{cfg.size} runs={cfg.runs} threads={cfg.threads}")
        print(f"  naive     median {naive_med:9.4f} s")
        print(f"  fragment  median {frag_med:9.4f} s")
        print(f"  speedup   {naive_med / frag_med:8.1f}x")
        if cfg.posteriors:
            save_posteriors(cfg.posteriors, dense.posteriors)
    return 0


def cmd_init_weights(cfg: RunConfig) -> int:
    net = load_net(cfg.net)
    weights = init_weights(net, cfg.seed)
    save_weights(weights, cfg.out)
    print(f"wrote {weights.value_count} values for seed {cfg.seed} -> {cfg.out}")
    return 0


def cmd_make_image(cfg: RunConfig) -> int:
    write_pgm(cfg.out, synthetic_slice(cfg.size, seed=cfg.seed))
    print(f"wrote {cfg.size}x{cfg.size} synthetic slice (seed {cfg.seed}) -> {cfg.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "f64", False):
        args.precision = "f64"
    try:
        cfg = RunConfig.from_args(args)
        return args.func(cfg)
    except (FragscanError, OSError, ValueError) as exc:
        print(f"fragscan: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

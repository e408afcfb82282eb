"""Benchmark the numba kernels against the pure-numpy fallback.

Both backends must produce bit-identical outputs, so this script first
checks equality on every input it times, then reports best-of-N wall
times per kernel. Run from the repository root:

    python3 benchmarks/bench_kernels.py --size 512 --repeats 5

The numba backend pays a one-time JIT cost that is excluded by a warmup
pass.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from heatlab.kernels import numba_impl, numpy_impl


def make_inputs(size: int, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    r = np.hypot(yy - size / 2.0, xx - size / 2.0)
    blobs = (r % 37.0) < 9.0
    mask = blobs & (rng.random((size, size)) < 0.6)

    codes = rng.integers(0, 12, size=(size, size)).astype(np.int64)
    codes[rng.random((size, size)) < 0.05] = -1

    # a jagged 24-gon roughly centered on the grid
    angles = np.linspace(0.0, 2.0 * np.pi, 24, endpoint=False)
    radius = size * (0.25 + 0.12 * np.cos(5.0 * angles))
    px = 30.0
    poly_x = 0.5 * size * px + radius * np.cos(angles) * px
    poly_y = -0.5 * size * px + radius * np.sin(angles) * px

    counts = (mask & (codes > 3)).astype(np.int64)
    return {
        "edt_sq": (mask,),
        "label_components": (mask,),
        "majority_downsample": (codes, 4, -1),
        "rasterize_polygon": (poly_x, poly_y, size, size, 0.0, 0.0, px),
        "box_count": (counts, 5),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def bench(size: int, repeats: int, number: int) -> None:
    inputs = make_inputs(size)
    print(f"grid {size}x{size}, best of {repeats} runs x {number} calls\n")
    print(f"{'kernel':<22}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>10}")
    for name, args in inputs.items():
        np_fn = getattr(numpy_impl, name)
        nb_fn = getattr(numba_impl, name)
        expect = np_fn(*args)
        nb_fn(*args)  # JIT warmup
        got = nb_fn(*args)
        if not same(expect, got):
            raise SystemExit(f"backend mismatch in {name}: outputs differ")
        t_np = min(timeit.repeat(lambda: np_fn(*args), number=number, repeat=repeats))
        t_nb = min(timeit.repeat(lambda: nb_fn(*args), number=number, repeat=repeats))
        ms_np = 1e3 * t_np / number
        ms_nb = 1e3 * t_nb / number
        print(f"{name:<22}{ms_np:>12.3f}{ms_nb:>12.3f}{ms_np / ms_nb:>9.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--number", type=int, default=3, help="calls per timed run")
    args = parser.parse_args()
    bench(args.size, args.repeats, args.number)


if __name__ == "__main__":
    main()

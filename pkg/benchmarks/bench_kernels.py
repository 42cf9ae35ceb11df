"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--size 1000] [--repeat 5]

Each kernel is called once before timing so numba compilation is excluded.
With CROPCHANGE_DISABLE_NUMBA set the "numba" column times plain Python loops.
"""
import argparse
import math
import timeit

import numpy as np

from cropchange import _accel
from cropchange import kernels as k


def cases(size, rng):
    n = size * size
    px = rng.uniform(0, 1, n)
    py = rng.uniform(0, 1, n)
    theta = np.linspace(0, 2 * math.pi, 65)
    ring_x = np.concatenate([0.5 + 0.4 * np.cos(theta), 0.3 + 0.1 * np.cos(theta)])
    ring_y = np.concatenate([0.5 + 0.4 * np.sin(theta), 0.3 + 0.1 * np.sin(theta)])
    ring_start = np.array([0, 65, 130], dtype=np.int64)
    lon = 39.0 + px * 0.5
    lat = 13.0 + py * 0.5
    clon = rng.uniform(39.0, 39.5, 50)
    clat = rng.uniform(13.0, 13.5, 50)
    codes = rng.integers(0, 4, (size, size)).astype(np.int32)
    keep = rng.random((size, size)) < 0.9
    return {
        "points_in_rings": (k._points_in_rings_nb, k._points_in_rings_np, (px, py, ring_x, ring_y, ring_start)),
        "within_radius": (k._within_radius_nb, k._within_radius_np,
                          (lon, lat, clon, clat, 5000.0, k.EARTH_RADIUS_M)),
        "row_class_counts": (k._row_class_counts_nb, k._row_class_counts_np, (codes, keep, 4)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1000, help="grid side; points = size**2")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"backend={'numba' if _accel.USE_NUMBA else 'numpy'} size={args.size}x{args.size}")
    print(f"{'kernel':<18} {'numba_s':>10} {'numpy_s':>10} {'speedup':>8}  agree")
    for name, (nb, npf, a) in cases(args.size, rng).items():
        same = np.array_equal(nb(*a), npf(*a))
        t_nb = min(timeit.repeat(lambda: nb(*a), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: npf(*a), number=1, repeat=args.repeat))
        print(f"{name:<18} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f}  {same}")


if __name__ == "__main__":
    main()

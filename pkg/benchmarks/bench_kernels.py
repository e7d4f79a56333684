"""Time the numba and numpy variant of every hot kernel.

    python3 benchmarks/bench_kernels.py [--repeat N] [--quick]

Each kernel is run once untimed (so numba compilation is excluded), then the
best of ``--repeat`` runs is reported along with the numpy/numba ratio.
"""
import argparse
import time

import numpy as np

from vidprnu import kernels
from vidprnu.denoise import DenoiserParams, denoise_frame


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(quick):
    rng = np.random.default_rng(0)
    h, w = (240, 320) if quick else (1080, 1920)
    band = (rng.normal(size=(h // 2, w // 2)) * 8).astype(np.float32)
    windows = np.array([3, 5, 7, 9], np.int64)
    frame = rng.integers(0, 256, (h, w), dtype=np.uint8)
    res = rng.normal(size=(h, w)).astype(np.float32)
    mask = rng.integers(0, 2, (h, w)).astype(np.uint8)
    num, den = np.zeros((h, w)), np.zeros((h, w))
    k = rng.normal(scale=0.05, size=(h, w))
    n = 100 if quick else 400
    sim = rng.uniform(-1, 1, (n, n))
    sim = np.triu(sim, 1)
    sim = sim + sim.T
    np.fill_diagonal(sim, 1.0)
    return {
        "wiener_shrink": (f"{band.shape[1]}x{band.shape[0]} subband", (band, 9.0, windows)),
        "accumulate_masked": (f"{w}x{h} frame", (num, den, res, frame, mask)),
        "gamma3_map": (f"{w}x{h} fingerprint", (k, 20.0)),
        "average_linkage": (f"{n} videos", (sim,)),
    }, frame


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small inputs")
    args = ap.parse_args()

    table, frame = cases(args.quick)
    print(f"{'kernel':<20}{'input':<24}{'numba ms':>10}{'numpy ms':>10}{'ratio':>8}")
    for name, (label, inputs) in table.items():
        fast, slow = kernels.VARIANTS[name]
        t_fast = best_of(lambda: fast(*inputs), args.repeat)
        t_slow = best_of(lambda: slow(*inputs), args.repeat)
        print(f"{name:<20}{label:<24}{t_fast * 1e3:>10.2f}{t_slow * 1e3:>10.2f}"
              f"{t_slow / t_fast:>8.1f}")

    # whole-frame denoise with the active backend, for scale
    t = best_of(lambda: denoise_frame(frame, DenoiserParams()), args.repeat)
    h, w = frame.shape
    print(f"\ndenoise_frame {w}x{h} ({kernels.wiener_shrink.__name__}): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()

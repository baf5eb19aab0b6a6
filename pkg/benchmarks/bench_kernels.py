"""Compare the numba and numpy backends of the integer kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each case runs once to warm up (numba compiles on first call), then the
best of N timings is reported.  Both backends must return identical arrays.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from eqloc import kernels
from eqloc.spherical import SurfaceKind, sample_tuples, window_system


def _best(fn, repeat: int) -> float:
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def box_case(radius: int):
    # lattice points of a dilated cross-polytope in rank 3
    A = np.array([[a, b, c] for a in (-1, 1) for b in (-1, 1) for c in (-1, 1)], dtype=np.int64)
    b = np.full(len(A), -radius, dtype=np.int64)
    lo, hi = [-radius] * 3, [radius] * 3
    return lambda backend: kernels.box_points(A, b, lo, hi, backend=backend)


def matvec_case(kind: str, count: int):
    k = SurfaceKind.parse(kind)
    system = window_system(k, 8)
    rng = np.random.default_rng(1)
    tuples = sample_tuples(k, count, 8, rng)
    F = np.stack([system.encode(f) for f in tuples])
    C = rng.integers(-2, 3, size=(count, system.matrix.shape[1])).astype(np.int64)
    return lambda backend: kernels.matvec_check(system.matrix, C, F, backend=backend)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if kernels.njit is None:
        raise SystemExit("numba is unavailable (or EQLOC_NUMBA=0); nothing to compare")
    cases = [
        ("box_points r=10", box_case(10)),
        ("box_points r=25", box_case(25)),
        ("matvec_check fn:3 x 2000", matvec_case("fn:3", 2000)),
        ("matvec_check p1p1 x 10000", matvec_case("p1p1", 10000)),
    ]
    print(f"{'case':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, run in cases:
        a, b = run("numpy"), run("numba")
        if not np.array_equal(a, b):
            raise SystemExit(f"{name}: backends disagree")
        t_np = _best(lambda: run("numpy"), args.repeat)
        t_nb = _best(lambda: run("numba"), args.repeat)
        print(f"{name:28s} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()

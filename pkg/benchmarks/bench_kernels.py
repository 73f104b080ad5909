"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from randlu import kernels
from randlu._accel import HAS_NUMBA
from randlu.haar import haar_unitaries
from randlu.moments import _joint, zz
from randlu.states import random_state


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    U = np.ascontiguousarray(_joint([haar_unitaries(rng, 100_000), haar_unitaries(rng, 100_000)]))
    rho = random_state(1).matrix
    M = np.ascontiguousarray(zz().matrix)
    vecs = np.ascontiguousarray(haar_unitaries(rng, 200 * 60).reshape(200, 60, 4))
    box = np.array([-0.87, -0.37, 2.16, 2.66, 1.86, 2.56])
    yield "conjugated_expectations (1e5 x 4x4)", (
        lambda: kernels.conjugated_expectations_np(U, rho, M),
        lambda: kernels.conjugated_expectations_jit(U, rho, M),
    )
    yield "frame_potentials (200 sets of 60, t=4)", (
        lambda: kernels.frame_potentials_np(vecs, 4),
        lambda: kernels.frame_potentials_jit(vecs, 4),
    )
    yield "lattice_min (grid 401, Fmax)", (
        lambda: kernels.lattice_min_np(401, box, kernels.FMAX, 1e-9),
        lambda: kernels.lattice_min_jit(401, box, kernels.FMAX, 1e-9),
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba not installed; only the numpy path is available")
    print(f"{'kernel':<42}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, (f_np, f_jit) in cases():
        t_np = best_of(f_np, args.repeat)
        if HAS_NUMBA:
            t_jit = best_of(f_jit, args.repeat)
            print(f"{name:<42}{t_np:>12.4f}{t_jit:>12.4f}{t_np / t_jit:>9.1f}x")
        else:
            print(f"{name:<42}{t_np:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()

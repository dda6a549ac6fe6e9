"""Compiled versus pure-Python kernels.

Times each kernel on a representative workload with both implementations,
then an end-to-end run (polars, viability, synthesis) with the backend
chosen at import, in separate processes.

    python benchmarks/bench_kernels.py [--repeat 5] [--no-pipeline]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from invkit import kernels


def workloads(rng):
    # double description: incidence of 400 rays against 40 constraints
    Z = rng.uniform(size=(400, 40)) < 0.25
    sign = rng.integers(-1, 2, 400)
    pos, neg = np.flatnonzero(sign > 0), np.flatnonzero(sign < 0)
    # Fourier-Motzkin: 120 inequalities in 6 variables
    A = rng.standard_normal((120, 6))
    b = rng.uniform(0.5, 1.0, 120)
    # piece lookup: 200k points in the 16 sectors of the plane
    t = 2 * np.pi * np.arange(17) / 16
    normals, ptr = [], [0]
    for k in range(16):
        lo, hi = t[k], t[k + 1]
        normals += [[np.sin(lo), -np.cos(lo)], [-np.sin(hi), np.cos(hi)]]
        ptr.append(len(normals))
    X = rng.standard_normal((200_000, 2))
    # second moments of 50k tetrahedra
    S = rng.standard_normal((50_000, 4, 3))
    return {
        "dd_adjacent_pairs": lambda K: K.dd_adjacent_pairs(Z, pos, neg, 2),
        "fm_combine": lambda K: K.fm_combine(A, b, 5, 1e-12),
        "locate_pieces": lambda K: K.locate_pieces(X, np.array(normals), np.array(ptr), 1e-10),
        "simplex_second_moments": lambda K: K.simplex_second_moments(S),
    }


PIPELINE = """
import time
import numpy as np
from invkit import kernels
from invkit.partition import orthant_partition
from invkit.polyhedra import HPolyhedron
from invkit.synth import SynthesisProblem, partition_from_iterate, solve
from invkit.systems import LinearControlSystem, viability_kernel
import sys
sys.path.insert(0, "tests")
from randgen import random_valid_pwse_2d

t0 = time.perf_counter()
rng = np.random.default_rng(0)
for k in range(60):
    random_valid_pwse_2d(rng, 6).polar().polar()
X = HPolyhedron.box([-1, -1, -1], [1, 1, 1])
A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
viability_kernel(LinearControlSystem(A, [[0.0], [0.0], [1.0]], X))
di = LinearControlSystem([[1.0, 1.0], [0.0, 1.0]], [[0.0], [1.0]], HPolyhedron.box([-1, -1], [1, 1]))
for part in (orthant_partition(2), partition_from_iterate(di, 1)):
    solve(SynthesisProblem(di, part))
print(kernels.BACKEND, time.perf_counter() - t0)
"""


def run_pipeline(pure: bool):
    env = dict(os.environ)
    if pure:
        env["INVKIT_PURE_PYTHON"] = "1"
    else:
        env.pop("INVKIT_PURE_PYTHON", None)
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, cwd=root,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-pipeline", action="store_true")
    args = ap.parse_args(argv)

    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
    jobs = workloads(np.random.default_rng(0))
    names = sorted(impls)
    print(f"{'kernel':<24}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}")
    for job, fn in jobs.items():
        best = {}
        for n in names:
            K = impls[n]
            fn(K)  # warm up
            best[n] = min(timeit.repeat(lambda: fn(K), number=1, repeat=args.repeat)) * 1e3
        speed = best["python"] / best["cython"] if "cython" in best else float("nan")
        print(f"{job:<24}" + "".join(f"{best[n]:>16.2f}" for n in names) + f"{speed:>9.1f}x")

    if not args.no_pipeline:
        print()
        for pure in (True, False):
            backend, secs = run_pipeline(pure)
            print(f"pipeline with {backend:<8} kernels: {secs:.2f} s")


if __name__ == "__main__":
    main()

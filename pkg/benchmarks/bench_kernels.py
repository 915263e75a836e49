"""Compare the numba kernels with the pure-numpy fallback.

Kernel timings run in-process against both implementations. The end-to-end
timing runs one NARMA point per backend in a subprocess, toggling
DEEPESN_DISABLE_NUMBA, so import-time selection is exercised as users see it.

    python3 benchmarks/bench_kernels.py [--N 50] [--T 20000] [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from deepesn import _kernels

END_TO_END = (
    "import time; from deepesn.evaluation import PointParams, run_point; "
    "run_point('series', PointParams(), 0); t = time.perf_counter(); "
    "[run_point(a, PointParams(), s) for a in ('shallow', 'parallel', 'series') for s in range(5)]; "
    "print(time.perf_counter() - t)"
)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(n, T, repeat):
    rng = np.random.default_rng(0)
    W = rng.uniform(-1, 1, (n, n))
    W *= 0.9 / np.max(np.abs(np.linalg.eigvals(W)))
    drive = rng.uniform(-1, 1, (T, n))
    x0 = np.zeros(n)
    s = rng.uniform(0, 1, T)

    cases = {
        f"drive_reservoir tanh N={n} T={T}": (
            lambda: _kernels.drive_reservoir_py(W, drive, x0, False),
            lambda: _kernels.drive_reservoir(W, drive, x0, False),
        ),
        f"drive_reservoir identity N={n} T={T}": (
            lambda: _kernels.drive_reservoir_py(W, drive, x0, True),
            lambda: _kernels.drive_reservoir(W, drive, x0, True),
        ),
        f"narma_recurrence tau=5 T={T}": (
            lambda: _kernels.narma_recurrence_py(s, 5, 10.0),
            lambda: _kernels.narma_recurrence(s, 5, 10.0),
        ),
    }
    rows = []
    for name, (py, nb) in cases.items():
        nb()  # compile outside the timed region
        rows.append((name, best(py, repeat), best(nb, repeat)))
    return rows


def end_to_end(disable):
    env = dict(os.environ)
    if disable:
        env["DEEPESN_DISABLE_NUMBA"] = "1"
    else:
        env.pop("DEEPESN_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True, capture_output=True, text=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=50)
    ap.add_argument("--T", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not _kernels.HAS_NUMBA:
        sys.exit("numba is unavailable or disabled; nothing to compare")

    print(f"{'case':<42}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, t_py, t_nb in kernel_rows(args.N, args.T, args.repeat):
        print(f"{name:<42}{t_py:>12.4f}{t_nb:>12.4f}{t_py / t_nb:>9.1f}x")
    t_py, t_nb = end_to_end(True), end_to_end(False)
    name = "15 NARMA runs (N=50, all architectures)"
    print(f"{name:<42}{t_py:>12.4f}{t_nb:>12.4f}{t_py / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()

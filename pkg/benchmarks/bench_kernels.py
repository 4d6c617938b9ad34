"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--n 200000]

Each pair is checked for bitwise agreement before timing. The end-to-end
section solves one optimization problem in a child process per backend,
toggling NWOPT_DISABLE_NUMBA.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from nwopt import _accel

SOLVE_SNIPPET = """
import time
from nwopt import make_newsvendor, sample_dataset, solve_nw, _accel
from nwopt.problems import GeneratorSpec
prob = make_newsvendor(p=2)
data = sample_dataset(GeneratorSpec(p=2), {n}, 7)
solve_nw(data, prob.spec, [0.5, 0.5], 0.2, 0.05)
t = time.perf_counter()
for _ in range({repeat}):
    solve_nw(data, prob.spec, [0.5, 0.5], 0.2, 0.005)
print(_accel.USING_NUMBA, (time.perf_counter() - t) / {repeat})
"""


def best_of(fn, args, repeat):
    fn(*args)  # warmup / jit compile
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def same(a, b):
    return np.array_equal(np.asarray(a), np.asarray(b))


def kernel_cases(n, rng):
    cov = rng.random((n, 3))
    q = rng.random(3)
    vals = rng.random(n)
    mat = rng.random((200, n // 100))
    dec = np.linspace(0.0, 1.0, 200)
    out = rng.random(n // 100)
    return [
        ("ball_mask", _accel.ball_mask_numpy, _accel.ball_mask_numba, (cov, q, 0.3)),
        ("sequential_sum", _accel.sequential_sum_numpy, _accel.sequential_sum_numba, (vals,)),
        ("row_sums", _accel.row_sums_numpy, _accel.row_sums_numba, (mat,)),
        ("newsvendor_loss_grid", _accel.newsvendor_loss_grid_numpy, _accel.newsvendor_loss_grid_numba,
         (dec, out, 1.0, 2.0, 0.4)),
    ]


def end_to_end(n, repeat):
    rows = {}
    for disabled in ("0", "1"):
        env = dict(os.environ, NWOPT_DISABLE_NUMBA=disabled)
        code = SOLVE_SNIPPET.format(n=n, repeat=repeat)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        using, secs = res.stdout.split()
        rows["numba" if using == "True" else "numpy"] = float(secs)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if not _accel.USING_NUMBA:
        print("numba unavailable or disabled; only the numpy path can be timed")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  bitwise")
    for name, f_np, f_nb, fargs in kernel_cases(args.n, rng):
        eq = same(f_np(*fargs), f_nb(*fargs))
        t_np = best_of(f_np, fargs, args.repeat)
        t_nb = best_of(f_nb, fargs, args.repeat)
        print(f"{name:<22}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.2f}  {eq}")

    rows = end_to_end(args.n // 50, max(args.repeat // 4, 1))
    print(f"\nsolve_nw (n={args.n // 50}, p=2, tau=0.005): "
          f"numpy {rows['numpy'] * 1e3:.2f} ms, numba {rows['numba'] * 1e3:.2f} ms, "
          f"speedup {rows['numpy'] / rows['numba']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

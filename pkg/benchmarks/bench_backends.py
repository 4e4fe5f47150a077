"""Compare the compiled kernels with their numpy fallbacks.

Per-kernel timings call both dictionaries in this process.  The end-to-end
solve timings run in child processes, one with HOLEFOLD_NO_NUMBA=1, since
the backend is chosen at import time.

    python3 benchmarks/bench_backends.py [--repeat 5] [--sizes 40 80 160 320]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from holefold import _kernels as K
from holefold import gen


def kernel_cases(n, rng):
    poly = np.ascontiguousarray(gen.random_polygon(n, rng))
    pts = rng.uniform(-1.1, 1.1, size=(2000, 2))
    crit = rng.random((n, n)) < 0.05
    crit = crit | crit.T
    ids = np.arange(n, dtype=np.int64)
    i, j = 0, n // 2
    d = poly[j] - poly[i]
    d = d / np.linalg.norm(d)
    return {
        "pip_many": (pts, poly, 1e-12),
        "segment_in_polygon": (poly[i, 0], poly[i, 1], poly[j, 0], poly[j, 1], poly, 1e-12, False),
        "ray_exit": (poly[i, 0], poly[i, 1], d[0], d[1], poly, 1e-12),
        "first_visible_pair": (ids, crit, poly, 1e-12),
        "first_self_intersection": (poly, 1e-12),
    }


def time_call(fn, args, repeat):
    fn(*args)  # warm-up: compile outside the timing
    number = max(1, int(0.05 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
    best = min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat))
    return best / number


SOLVE_SNIPPET = """
import json, sys, time
import numpy as np
from holefold import gen, solve
from holefold._kernels import BACKEND
sizes = json.loads(sys.argv[1])
seeds = int(sys.argv[2])
solve(gen.build("I-SKEW"))
out = {"backend": BACKEND}
for n in sizes:
    ts = []
    for seed in range(seeds):
        bm = gen.random_instance(4, 3, seed, n_vertices=n)
        t0 = time.perf_counter()
        solve(bm)
        ts.append(time.perf_counter() - t0)
    out[str(n)] = float(np.median(ts))
print(json.dumps(out))
"""


def solve_medians(sizes, seeds, numpy_only):
    env = dict(os.environ)
    env.pop("HOLEFOLD_NO_NUMBA", None)
    if numpy_only:
        env["HOLEFOLD_NO_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET, json.dumps(sizes), str(seeds)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[40, 80, 160, 320])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--skip-solve", action="store_true")
    args = ap.parse_args(argv)

    if K.BACKEND != "numba":
        print("numba is not active in this process; kernel rows compare numpy with itself")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'n':>6}{'numba us':>12}{'numpy us':>12}{'speedup':>10}")
    for n in args.sizes:
        cases = kernel_cases(n, rng)
        for name, call_args in cases.items():
            fast = time_call(K.ACTIVE_KERNELS[name], call_args, args.repeat)
            slow = time_call(K.NUMPY_KERNELS[name], call_args, args.repeat)
            print(f"{name:<24}{n:>6}{1e6 * fast:>12.1f}{1e6 * slow:>12.1f}{slow / fast:>10.1f}")

    if args.skip_solve:
        return
    print()
    fast = solve_medians(args.sizes, args.seeds, numpy_only=False)
    slow = solve_medians(args.sizes, args.seeds, numpy_only=True)
    print(f"median solve, d=3, 4 folds, {args.seeds} seeds "
          f"({fast['backend']} vs {slow['backend']})")
    print(f"{'n':>6}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for n in args.sizes:
        a, b = fast[str(n)], slow[str(n)]
        print(f"{n:>6}{1e3 * a:>12.2f}{1e3 * b:>12.2f}{b / a:>10.1f}")
    for label, row in (("numba", fast), ("numpy", slow)):
        ys = [row[str(n)] for n in args.sizes]
        slope = np.polyfit(np.log(args.sizes), np.log(ys), 1)[0]
        print(f"{label} log-log exponent: {slope:.2f}")


if __name__ == "__main__":
    main()

"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--trial]

The default microbenchmarks time the three hot kernels on representative
workloads; --trial additionally times one full scenario trial per backend
(set GOFISIM_PURE_KERNELS=1 to force the fallback in other tooling).
"""

import argparse
import math
import subprocess
import sys
import time

import numpy as np

from gofisim.kernels import _pure

try:
    from gofisim.kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rollout(impl, n_iter=300):
    n = 200
    s = np.linspace(0.0, 100.0, n)
    x, y = s.copy(), np.zeros(n)
    h, k = np.zeros(n), np.zeros(n)
    prof_s = np.array([0.0, 40.0, 70.0, 100.0])
    prof_v = np.array([10.0, 10.0, 4.0, 0.0])
    lead = np.full((700, 2), np.inf)
    lead[200:400, 0] = 60.0
    out = np.zeros((700, 5))

    def run():
        for i in range(n_iter):
            impl.rollout(s, x, y, h, k, prof_s, prof_v,
                         0.0, 7.0 + 0.01 * (i % 7), 0.5, 6.0,
                         99.0, False, 0.1, 14.0, -5.0, 3.0, 3.0, 0.5,
                         lead, 0, 2.0, 4.0, 2.0, 0.375, 4.0, False, 700, out)

    return timeit(run)


def bench_collision(impl, n_iter=300):
    rng = np.random.default_rng(0)
    n = 400
    xa = np.cumsum(rng.uniform(0.5, 1.0, n))
    ya = rng.uniform(-0.2, 0.2, n)
    ha = rng.uniform(-0.1, 0.1, n)
    va = np.full(n, 8.0)
    xb = xa + 30.0
    yb = ya + 0.5
    hb = ha

    def run():
        for _ in range(n_iter):
            impl.first_collision(xa, ya, ha, va, 2.0, 0.9,
                                 xb, yb, hb, 2.0, 0.9, 0, True, -1.0)

    return timeit(run)


def bench_segment(impl, n_iter=20000):
    px = np.array([0.0, 8.0, 8.0, 0.0])
    py = np.array([0.0, 0.0, 8.0, 8.0])

    def run():
        for i in range(n_iter):
            impl.segment_hits_convex(-5.0, 0.1 * (i % 50), 15.0, 4.0, px, py)

    return timeit(run)


def bench_trial(env_value):
    code = ("import logging; logging.disable(logging.WARNING);"
            "from gofisim.simulator import run_trial;"
            "import time; t0=time.time();"
            "run_trial('3','gofi',seed=0);"
            "print(time.time()-t0)")
    import os

    env = dict(os.environ)
    env["GOFISIM_PURE_KERNELS"] = env_value
    out = subprocess.run([sys.executable, "-c", code], capture_output=True,
                         text=True, env=env)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trial", action="store_true",
                    help="also time one full scenario trial per backend")
    args = ap.parse_args()

    backends = [("pure", _pure)]
    if _native is not None:
        backends.append(("native", _native))
    else:
        print("native kernels not built; showing pure only")

    rows = []
    for name, impl in backends:
        rows.append((name, bench_rollout(impl), bench_collision(impl),
                     bench_segment(impl)))
    print(f"{'backend':8s} {'rollout':>10s} {'collision':>10s} {'segment':>10s}")
    for name, r, c, s in rows:
        print(f"{name:8s} {r * 1e3:9.1f}ms {c * 1e3:9.1f}ms {s * 1e3:9.1f}ms")
    if len(rows) == 2:
        print(f"{'speedup':8s} {rows[0][1] / rows[1][1]:9.1f}x "
              f"{rows[0][2] / rows[1][2]:9.1f}x {rows[0][3] / rows[1][3]:9.1f}x")

    if args.trial:
        t_pure = bench_trial("1")
        print(f"full trial (pure):   {t_pure:6.2f}s")
        if _native is not None:
            t_native = bench_trial("0")
            print(f"full trial (native): {t_native:6.2f}s "
                  f"({t_pure / t_native:.2f}x)")


if __name__ == "__main__":
    main()

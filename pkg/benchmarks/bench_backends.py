"""Compare the numba kernels against the pure numpy fallbacks.

The backend is chosen at import time, so each backend runs in its own
subprocess with VLC_LIMITS_BACKEND set. Timings are the minimum over
--repeat runs; numba compile time is excluded by a warmup call.

Usage: python3 benchmarks/bench_backends.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads():
    import numpy as np

    from vlc_limits import _ba, erokhin, lossy
    from vlc_limits.source import Pmf

    rng = np.random.default_rng(7)

    ns = 64
    p_big = rng.dirichlet(np.ones(ns))
    D_big = 1.0 - np.eye(ns)
    lams = np.linspace(0.5, 12.0, 24)

    def ba_kernel():
        q = None
        for lam in lams:
            q, _ = _ba.ba_fixed_slope(
                p_big, np.exp(-lam * D_big), q0=q, tol=1e-9, max_iter=500_000
            )

    p10 = Pmf(rng.dirichlet(np.ones(10)))
    eps_grid = np.linspace(0.01, 0.45, 12)

    def erokhin_sweep():
        for eps in eps_grid:
            erokhin.erokhin_oracle(p10, float(eps), tol=1e-9, max_iter=300_000)

    p9 = Pmf(rng.dirichlet(np.ones(9)))
    M9 = rng.uniform(0.0, 1.0, size=(9, 5))
    M9[np.arange(5), np.arange(5)] = 0.0
    spec9 = lossy.DistortionSpec(M9)

    def hdeps_scan():
        lossy.hdeps_exact(p9, spec9, 0.25, 0.1)

    return [
        ("ba_fixed_slope 64x64, 24 slopes", ba_kernel),
        ("erokhin_oracle n=10, 12 epsilons", erokhin_sweep),
        ("hdeps_exact scan 5^9 quantizers", hdeps_scan),
    ]


def run_worker(repeat: int) -> None:
    from vlc_limits._backend import resolve_backend

    results = {}
    for name, fn in _workloads():
        fn()  # warmup: jit compile + caches
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        results[name] = best
    print(json.dumps({"backend": resolve_backend(), "timings": results}))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", choices=("numpy", "numba"), help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        run_worker(args.repeat)
        return 0

    rows = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, VLC_LIMITS_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker", backend,
             "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        doc = json.loads(out.stdout.strip().splitlines()[-1])
        rows[backend] = doc["timings"]

    width = max(len(k) for k in rows["numpy"])
    print(f"{'workload':<{width}}  {'numpy':>9}  {'numba':>9}  {'speedup':>7}")
    for name in rows["numpy"]:
        tn, tb = rows["numpy"][name], rows["numba"][name]
        print(f"{name:<{width}}  {tn:>8.3f}s  {tb:>8.3f}s  {tn / tb:>6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Compare the compiled and pure-Python Glauber and flip kernels.

    python3 benchmarks/bench_kernels.py [--N 64] [--steps 200000]

Both backends consume the same random stream, so the final fields must agree;
the script checks that before reporting throughput.
"""

import argparse
import time

import numpy as np

from tiltsos import kernels


def _time(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t, out


def bench(N, steps, beta, drops, repeat):
    rows = []
    for name in ("glauber", "flips"):
        fields = {}
        for backend in ("cython", "python"):
            if backend == "cython" and kernels.BACKEND != "cython":
                continue
            best = float("inf")
            for _ in range(repeat):
                h = np.zeros((N, N), dtype=np.int64)
                if name == "flips":
                    x = np.arange(N)
                    h = -(drops[0] * x[:, None] // N) - (drops[1] * x[None, :] // N)
                    h = np.ascontiguousarray(h, dtype=np.int64)
                rng = np.random.default_rng(0)
                if name == "glauber":
                    dt, _ = _time(kernels.run_glauber, h, drops, beta, steps, rng, backend)
                else:
                    dt, _ = _time(kernels.run_flips, h, drops, steps, rng, backend)
                best = min(best, dt)
            fields[backend] = h
            rows.append((name, backend, best, steps / best))
        if len(fields) == 2 and not np.array_equal(fields["cython"], fields["python"]):
            raise SystemExit(f"{name}: backends disagree")
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--beta", type=float, default=0.6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    drops = (args.N // 3, args.N // 3)
    rows = bench(args.N, args.steps, args.beta, drops, args.repeat)
    print(f"N={args.N} steps={args.steps} drops={drops} (best of {args.repeat})")
    print(f"{'kernel':8s} {'backend':8s} {'seconds':>9s} {'steps/s':>12s}")
    for name, backend, dt, rate in rows:
        print(f"{name:8s} {backend:8s} {dt:9.3f} {rate:12.0f}")
    by = {(n, b): dt for n, b, dt, _ in rows}
    for name in ("glauber", "flips"):
        if (name, "cython") in by:
            print(f"{name}: compiled speed-up x{by[(name, 'python')] / by[(name, 'cython')]:.1f}")


if __name__ == "__main__":
    main()

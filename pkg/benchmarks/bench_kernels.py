"""Compare the compiled and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the capped-simplex projection, the ray weight and the Z_x sampler on
both backends, then a short online run with each backend selected at import
(via a subprocess with UPCONCAVE_PURE_PYTHON set).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from upconcave import _kernels_py

try:
    from upconcave import _ckernels
except ImportError:
    _ckernels = None

ONLINE_SNIPPET = """
import time
from upconcave import make_uniform_matroid, random_quadratic, run_online, ThetaSpec, BACKEND
f = random_quadratic(8, seed=0)
t = time.perf_counter()
run_online(make_uniform_matroid(8, 3), f, ThetaSpec.norm_power(1, 1), 1.0, {T}, "sphere", 1.0, seed=0)
print(BACKEND, time.perf_counter() - t)
"""


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<34s} {best * 1e6:10.1f} us")
    return best


def online(pure, T):
    env = dict(os.environ)
    if pure:
        env["UPCONCAVE_PURE_PYTHON"] = "1"
    else:
        env.pop("UPCONCAVE_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", ONLINE_SNIPPET.format(T=T)], env=env,
                         capture_output=True, text=True, check=True).stdout.split()
    return out[0], float(out[1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--rounds", type=int, default=2000)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    v8 = 2 * rng.random(8) - 0.5
    v64 = 2 * rng.random(64) - 0.5
    u = rng.random(1)
    u1k = rng.random(1000)
    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.insert(0, ("cython", _ckernels))
    else:
        print("compiled extension not built; timing the pure backend only")

    times = {}
    for name, mod in backends:
        print(name)
        times[name] = [
            bench("project_capped_simplex d=8", lambda: mod.project_capped_simplex(v8, 3.0, True), args.repeat),
            bench("project_capped_simplex d=64", lambda: mod.project_capped_simplex(v64, 20.0, True), args.repeat),
            bench("ray_weight", lambda: mod.ray_weight(0.5, 2.0), args.repeat),
            bench("sample_ray x1", lambda: mod.sample_ray(0.5, 2.0, u), args.repeat),
            bench("sample_ray x1000", lambda: mod.sample_ray(0.5, 2.0, u1k), args.repeat),
        ]
    if len(times) == 2:
        speed = np.array(times["python"]) / np.array(times["cython"])
        print("speedup (python / cython):", " ".join(f"{s:.1f}x" for s in speed))

    print(f"online run, T={args.rounds}")
    for pure in ((False, True) if _ckernels is not None else (True,)):
        name, secs = online(pure, args.rounds)
        print(f"  backend={name:<7s} {secs:8.3f} s")


if __name__ == "__main__":
    main()

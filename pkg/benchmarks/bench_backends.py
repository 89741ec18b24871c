"""Compare the compiled (numba) and pure-numpy backends.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``SEMIBART_DISABLE_NUMBA``.  Reported times exclude numba
compilation (one warm-up fit runs first).

    python benchmarks/bench_backends.py --n 500 --m 50 --iters 200
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json, sys, time
import numpy as np
from semibart import _accel
from semibart.sampler import SamplerConfig, fit
from semibart.scenarios import ScenarioSpec, generate

n, m, iters, seed = (int(v) for v in sys.argv[1:5])
gd = generate(ScenarioSpec("s2a", n, seed))
fit(gd.dataset, gd.linear_spec, SamplerConfig(m=m, n_iter=3, n_burn=1, seed=seed))
t0 = time.perf_counter()
d = fit(gd.dataset, gd.linear_spec, SamplerConfig(m=m, n_iter=iters, n_burn=0, seed=seed))
elapsed = time.perf_counter() - t0
print(json.dumps({"backend": _accel.BACKEND, "seconds": elapsed,
                  "psi_mean": d.psi_draws.mean(axis=0).tolist()}))
"""


def run_backend(disable: bool, args) -> dict:
    env = dict(os.environ)
    env.pop("SEMIBART_DISABLE_NUMBA", None)
    if disable:
        env["SEMIBART_DISABLE_NUMBA"] = "1"
    cmd = [sys.executable, "-c", _WORKER, str(args.n), str(args.m), str(args.iters),
           str(args.seed)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args(argv)

    results = [run_backend(False, args), run_backend(True, args)]
    base = results[0]["seconds"]
    print(f"s2a data, n={args.n}, m={args.m}, {args.iters} sweeps")
    print(f"{'backend':8s} {'seconds':>9s} {'ms/sweep':>9s} {'relative':>9s}")
    for r in results:
        print(f"{r['backend']:8s} {r['seconds']:9.2f} {1e3 * r['seconds'] / args.iters:9.2f} "
              f"{r['seconds'] / base:9.1f}x")
    same = results[0]["psi_mean"] == results[1]["psi_mean"]
    print(f"identical chains: {same}")


if __name__ == "__main__":
    main()

"""Compare the compiled and numpy kernel backends.

Times the two kernels in isolation and one end-to-end forest fit. Each
backend runs in its own interpreter because the backend is chosen at
import time.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, timeit
import numpy as np
from allclear_tsf import _kernels
from allclear_tsf.forest import TsfHyperParams, fit_tsf
from allclear_tsf.intervals import sample_intervals

repeat = int(sys.argv[1])
g = np.random.default_rng(0)
X = g.normal(size=(500, 120))
ivs = sample_intervals(120, 11, rng_seed=1)
F = _kernels.interval_features(X, ivs.starts, ivs.ends)
y = (g.random(500) < 0.15).astype(np.uint8)
rows = np.arange(500, dtype=np.intp)

def best(stmt, number):
    return min(timeit.repeat(stmt, number=number, repeat=repeat)) / number

out = {
    "backend": _kernels.BACKEND,
    "interval_features_ms": 1e3 * best(lambda: _kernels.interval_features(X, ivs.starts, ivs.ends), 50),
    "best_split_ms": 1e3 * best(lambda: _kernels.best_split(F, y, rows, 1.0, 1.0, 1), 50),
    "fit_100_trees_s": best(lambda: fit_tsf(X, y.astype(bool), TsfHyperParams(n_estimators=100), seed=0), 1),
}
print(json.dumps(out))
"""


def run(backend, repeat):
    env = {**os.environ, "ALLCLEAR_TSF_BACKEND": backend}
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    results = [run(b, args.repeat) for b in ("cython", "numpy")]
    if results[0]["backend"] != "cython":
        print("compiled extension not available; only the numpy backend was measured")
        results = results[1:]
    keys = ["interval_features_ms", "best_split_ms", "fit_100_trees_s"]
    print(f"{'backend':<8}" + "".join(f"{k:>22}" for k in keys))
    for r in results:
        print(f"{r['backend']:<8}" + "".join(f"{r[k]:>22.3f}" for k in keys))
    if len(results) == 2:
        print(f"{'speedup':<8}" + "".join(f"{results[1][k] / results[0][k]:>21.1f}x" for k in keys))


if __name__ == "__main__":
    main()

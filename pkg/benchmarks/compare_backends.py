"""Compare the compiled (numba) and pure-numpy filter backends.

The backend is chosen at import time from the SVDKF_NUMBA environment
variable, so each backend runs in a fresh subprocess.  For every filter
we time complete passes over the same simulated trajectory and report
mean per-run wall-clock for both backends plus the speedup.

Usage: python benchmarks/compare_backends.py [--runs N] [--steps K]
"""

import argparse
import json
import os
import subprocess
import sys

_CHILD_CODE = r"""
import json, sys, time
import numpy as np
from svdkf import NUMBA_ENABLED, example1, make_filter, simulate
from svdkf.bench import FILTER_ORDER, split_seed

runs, steps = int(sys.argv[1]), int(sys.argv[2])
model = example1()
trajs = [simulate(model, steps, seed=split_seed(42, j)) for j in range(runs)]

# warm-up pass so jit compilation is not billed to the measurement
for name in FILTER_ORDER:
    make_filter(name, model).run(trajs[0].measurements, trajs[0].controls)

out = {"numba": bool(NUMBA_ENABLED), "mean_s": {}}
for name in FILTER_ORDER:
    t0 = time.perf_counter()
    for traj in trajs:
        flt = make_filter(name, model)
        est, failure = flt.run(traj.measurements, traj.controls)
        assert failure is None
    out["mean_s"][name] = (time.perf_counter() - t0) / runs
print(json.dumps(out))
"""


def run_backend(enabled: bool, runs: int, steps: int) -> dict:
    env = dict(os.environ, SVDKF_NUMBA="1" if enabled else "0")
    proc = subprocess.run(
        [sys.executable, "-c", _CHILD_CODE, str(runs), str(steps)],
        env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=200)
    parser.add_argument("--steps", type=int, default=100)
    args = parser.parse_args()

    numba = run_backend(True, args.runs, args.steps)
    numpy_ = run_backend(False, args.runs, args.steps)
    if not numba["numba"]:
        print("warning: numba unavailable, both columns are pure numpy")

    print(f"{args.runs} runs x {args.steps} steps, mean seconds per run")
    print(f"{'filter':10s} {'numba':>12s} {'numpy':>12s} {'speedup':>9s}")
    for name, t_nb in numba["mean_s"].items():
        t_np = numpy_["mean_s"][name]
        print(f"{name:10s} {t_nb:12.6f} {t_np:12.6f} {t_np / t_nb:8.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

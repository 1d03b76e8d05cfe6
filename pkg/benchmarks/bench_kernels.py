"""Time the hot kernels on the numba and the pure-numpy paths.

Each backend runs in its own interpreter because the choice is made at
import time (``MSPROFILE_DISABLE_NUMBA``). Compilation is excluded by a
warm-up call.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from msprofile._accel import backend
from msprofile.costs import CostSpec
from msprofile.geometry import SyntheticRoadSpec, generate_synthetic_road
from msprofile.kernels import GRAVITY, sickness_rollout, vehicle_rollout
from msprofile.mpc import receding_loop
from msprofile.sickness import ConflictModelParams, SicknessState, evaluate_trace

repeat = int(sys.argv[1])
params = ConflictModelParams()
rng = np.random.default_rng(0)
jerk = rng.uniform(-2, 2, 40)
rho = rng.uniform(0, 0.003, 41)
state0 = SicknessState.at_rest().vector
t = np.arange(0.0, 600.0, 0.1)
ax, ay = np.sin(0.3 * t), np.cos(1.1 * t)
road = generate_synthetic_road(SyntheticRoadSpec(total_length=1000.0, radius_min=250.0,
                                                 radius_max=500.0, seed=3))

def horizon():
    ok, V, A, T, dV, dA, dT = vehicle_rollout(25.0, 0.0, 0.0, jerk, 12.5, True)
    sickness_rollout(V, A, T, rho, dV, dA, dT, state0, *params.kernel_args(), True)

cases = {
    "horizon_rollout_with_sensitivities": (horizon, 200),
    "trace_evaluation_600s": (lambda: evaluate_trace(t, ax, ay, params), 3),
    "mission_1km_adaptive": (lambda: receding_loop(road, CostSpec(kind="AdaptiveMsCost", c_ms=27.0)), 1),
}
out = {"backend": backend()}
for name, (fn, inner) in cases.items():
    fn()  # warm-up, includes compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    out[name] = best
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("MSPROFILE_DISABLE_NUMBA", None)
    if disable:
        env["MSPROFILE_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'case':40s} {'numba':>12s} {'numpy':>12s} {'speed-up':>9s}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:40s} {fast[key] * 1e3:10.3f}ms {slow[key] * 1e3:10.3f}ms {slow[key] / fast[key]:8.1f}x")


if __name__ == "__main__":
    main()

"""Compare the numba kernels with the pure-Python fallback.

Each backend runs in its own interpreter because the choice is made at
import time (GIBBSTESS_DISABLE_NUMBA).  Both runs use the same seeds, so
the outputs are also checked for equality.

    python3 benchmarks/bench_kernels.py [--steps 5000] [--mc 2000]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from gibbstess import _jit
from gibbstess.energy import HardcoreParams, LocalEvaluator, get_model
from gibbstess.sampler import run

steps, mc = int(sys.argv[1]), int(sys.argv[2])
m = get_model("model3")
beta = HardcoreParams(alpha=0.05, B=0.625)
out = {"backend": _jit.backend()}

# warm-up (compilation is excluded from the timings)
run(m, beta, 0.5, 100.0, n_iters=200, seed=0, check=False)

t = time.perf_counter()
res = run(m, beta, 0.5, 100.0, n_iters=steps, seed=1, check=False)
out["chain_s"] = time.perf_counter() - t
out["chain_hash"] = hash(res.points.tobytes())

ev = LocalEvaluator(res.points, m, beta)
xy = np.random.default_rng(2).random((mc, 2))
ev.birth(xy[:10])
t = time.perf_counter()
allowed, dS = ev.birth(xy)
out["birth_s"] = time.perf_counter() - t
t = time.perf_counter()
rem, hS = ev.death()
out["death_s"] = time.perf_counter() - t
out["mc_hash"] = hash(np.nan_to_num(dS).tobytes()) ^ hash(rem.tobytes())
print(json.dumps(out))
"""


def measure(disable, steps, mc):
    env = dict(os.environ)
    env.pop("GIBBSTESS_DISABLE_NUMBA", None)
    env["PYTHONHASHSEED"] = "0"
    if disable:
        env["GIBBSTESS_DISABLE_NUMBA"] = "1"
    r = subprocess.run([sys.executable, "-c", CHILD, str(steps), str(mc)], env=env,
                       capture_output=True, text=True, check=True)
    return json.loads(r.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5000, help="chain iterations")
    ap.add_argument("--mc", type=int, default=2000, help="insertion queries")
    a = ap.parse_args()
    fast = measure(False, a.steps, a.mc)
    slow = measure(True, a.steps, a.mc)
    print("%-22s %12s %12s %9s" % ("kernel", fast["backend"], slow["backend"], "speedup"))
    for key, label in (("chain_s", "chain, %d steps" % a.steps),
                       ("birth_s", "births, %d queries" % a.mc),
                       ("death_s", "deaths, all points")):
        print("%-22s %11.3fs %11.3fs %8.1fx" % (label, fast[key], slow[key], slow[key] / fast[key]))
    same = fast["chain_hash"] == slow["chain_hash"] and fast["mc_hash"] == slow["mc_hash"]
    print("identical outputs: %s" % same)
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())

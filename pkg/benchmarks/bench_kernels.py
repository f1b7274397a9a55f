"""Time the hot loops with numba and with the uncompiled fallback.

Each backend runs in its own interpreter, because CLIFFDESIGN_NO_NUMBA is read
at import time.  Compilation is excluded: every case runs once to warm up.

    python benchmarks/bench_kernels.py [--repeat 3] [--json]
"""

import argparse
import json
import os
import subprocess
import sys

CASES = {
    # name: (setup, statement)
    "pairwise_union_rank t=5": (
        "from cliffdesign._kernels import pairwise_union_rank\n"
        "from cliffdesign.lagrangian import enumerate_sigma\n"
        "import numpy as np\n"
        "b = np.array([T.space.basis for T in enumerate_sigma(5)], dtype=np.uint64)",
        "pairwise_union_rank(b, 10)"),
    "preserve_count t=18": (
        "from cliffdesign._kernels import preserve_count\n"
        "from cliffdesign.lagrangian import anti_identity\n"
        "cols = anti_identity(18).columns",
        "preserve_count(cols, 18)"),
    "sample_tableaux n=8 x2000": (
        "from cliffdesign._kernels import sample_tableaux",
        "sample_tableaux(8, 2000, 1)"),
    "frame_potential_blocks t=4 n=3 k=10, 2 blocks of 8": (
        "from cliffdesign import _kernels\n"
        "import numpy as np\n"
        "T = np.diag([1, np.exp(1j * np.pi / 4)])\n"
        "g = np.array([T, T.conj().T, np.eye(2)])",
        "_kernels.frame_potential_blocks(3, 4, 10, g, 1, 0, 2, 8)"),
    "walk_census n=2 x20000": (
        "from cliffdesign.stabilizer import walk_census",
        "walk_census(2, 20000, 1)"),
}

RUNNER = """
import json, sys, time
cases = json.loads(sys.argv[1]); repeat = int(sys.argv[2])
from cliffdesign import _kernels
out = {"backend": _kernels.BACKEND, "times": {}}
for name, (setup, stmt) in cases.items():
    env = {}
    exec(setup, env)
    exec(stmt, env)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        exec(stmt, env)
        best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("CLIFFDESIGN_NO_NUMBA", None)
    if disable:
        env["CLIFFDESIGN_NO_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", RUNNER, json.dumps(CASES), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print raw timings as JSON")
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, 1)
    if args.json:
        print(json.dumps({"numba": fast, "fallback": slow}, indent=2))
        return
    print(f"{'kernel':52s} {'numba':>10s} {'fallback':>10s} {'speedup':>8s}")
    for name in CASES:
        a, b = fast["times"][name], slow["times"][name]
        print(f"{name:52s} {a * 1e3:8.2f}ms {b * 1e3:8.1f}ms {b / a:7.1f}x")


if __name__ == "__main__":
    main()

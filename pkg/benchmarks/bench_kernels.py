"""Time the compiled and numpy kernel backends on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on both backends, results are checked to agree, and an
end-to-end entropic-scale run is timed in a subprocess per backend.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mplab import _pykernels
from mplab.gallery import baire_cube, grid_ball_space, random_closure_space

try:
    from mplab import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def same(a, b):
    if isinstance(a, tuple) or a is None:
        return a == b
    if isinstance(a, (int, float)):
        return a == b
    return np.array_equal(np.asarray(a), np.asarray(b))


def cases():
    ball = grid_ball_space(2, 21, "inf")
    D = np.ascontiguousarray(ball.rho1)
    order = np.arange(ball.n, dtype=np.intp)
    rc = random_closure_space(60, 1)
    R = np.ascontiguousarray(rc.rho1)
    eps = float(np.quantile(R[R > 0], 0.08))
    conflict = R <= eps
    b = baire_cube(8)
    rng = np.random.default_rng(0)
    logp = np.ascontiguousarray(np.log(rng.dirichlet(np.ones(64), size=b.n)))
    yield "greedy_separated  (441 pts)", lambda k: k.greedy_separated(D, order, 0.3)
    yield "clique_cover_count(441 pts)", lambda k: k.clique_cover_count(D, order, 0.3)
    yield "prefix_diameters  (441 pts)", lambda k: k.prefix_diameters(D, order)
    yield "triangle_witness  (120 pts)", lambda k: k.triangle_witness(np.ascontiguousarray(D[:120, :120]),
                                                                      False, 1e-12)
    yield "max_independent_set (60 v)", lambda k: k.max_independent_set(conflict)
    yield "audit_slope (256 x 64)", lambda k: k.audit_slope(logp, np.ascontiguousarray(b.rho1))


END_TO_END = ("from mplab.gallery import grid_ball_space; from mplab.scales import entropic_scale; "
              "import time; s=grid_ball_space(2,25,'inf'); t=time.perf_counter(); "
              "[entropic_scale(s,a) for a in (2.0,4.0,8.0)]; print(time.perf_counter()-t)")


def end_to_end(pure):
    env = dict(os.environ)
    env.pop("MPLAB_PURE_PYTHON", None)
    if pure:
        env["MPLAB_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled backend not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'kernel':30s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>9s}")
    for name, fn in cases():
        tp, rp = best_of(lambda: fn(_pykernels), args.repeat)
        tc, rc = best_of(lambda: fn(_ckernels), args.repeat)
        flag = "" if same(rp, rc) else "  MISMATCH"
        print(f"{name:30s} {tp * 1e3:12.3f} {tc * 1e3:12.3f} {tp / tc:8.1f}x{flag}")
    tp, tc = end_to_end(True), end_to_end(False)
    print(f"{'entropic_scale 2-d ball, 3 a':30s} {tp * 1e3:12.1f} {tc * 1e3:12.1f} {tp / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())

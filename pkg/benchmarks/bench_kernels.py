"""Compare the numba kernels with their numpy twins.

Part one times each kernel in-process on random column stacks of a
face-sized problem.  Part two times a full multi-direction fit under each
backend in a fresh interpreter (the backend is fixed at import time).

    python3 benchmarks/bench_kernels.py [--d1 64] [--d2 64] [--n 120] [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from g2dlda import _kernels

FIT_SNIPPET = """
import time, numpy as np
from g2dlda import SolverConfig, fit, BACKEND
from g2dlda.synth import SynthSpec, generate
d, _ = generate(SynthSpec(classes={c}, per_class={per}, rows={d1}, cols={d2}, seed=0))
cfg = SolverConfig(p=1.0, sigma=0.01, r1={r1}, itmax=20)
fit(d, SolverConfig(p=1.0, sigma=0.01, r1=1, itmax=2))  # warm-up / JIT
best = min(
    (lambda t0: (fit(d, cfg), time.perf_counter() - t0)[1])(time.perf_counter())
    for _ in range({repeat})
)
print(BACKEND, best)
"""


def bench_kernels(d1, d2, n, repeat):
    rng = np.random.default_rng(0)
    cols = rng.standard_normal((n * d2, d1))
    counts = rng.integers(1, 20, n * d2).astype(float)
    w = rng.standard_normal(d1)
    calls = {
        "weighted_gram": lambda k: k["weighted_gram"](cols, w, 1.0, 0.01, 1e-12, False),
        "reweighted_offsets": lambda k: k["reweighted_offsets"](cols, counts, w, 1.0, 1e-12, False),
        "lp_sums": lambda k: k["lp_sums"](cols, cols, counts, w, 1.0),
    }
    print(f"kernels on {n * d2} columns of length {d1} (best of {repeat}, ms)")
    print(f"{'kernel':<20}{'numpy':>10}{'numba':>10}{'speedup':>10}")
    for name, call in calls.items():
        t_np = min(timeit.repeat(lambda: call(_kernels.NUMPY_KERNELS), number=1, repeat=repeat))
        if _kernels.NUMBA_KERNELS is None:
            print(f"{name:<20}{1e3 * t_np:>10.2f}{'n/a':>10}")
            continue
        call(_kernels.NUMBA_KERNELS)  # compile
        t_nb = min(timeit.repeat(lambda: call(_kernels.NUMBA_KERNELS), number=1, repeat=repeat))
        print(f"{name:<20}{1e3 * t_np:>10.2f}{1e3 * t_nb:>10.2f}{t_np / t_nb:>10.2f}")


def bench_fit(d1, d2, n, repeat, classes=10, r1=5):
    code = FIT_SNIPPET.format(c=classes, per=max(2, n // classes), d1=d1, d2=d2, r1=r1, repeat=repeat)
    print(f"\nfull fit: {classes} classes x {max(2, n // classes)} images of {d1}x{d2}, r1={r1}, itmax=20")
    for backend in ("numpy", "numba"):
        env = dict(os.environ, G2DLDA_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        if out.returncode:
            print(f"{backend:<8} failed: {out.stderr.strip().splitlines()[-1]}")
            continue
        used, secs = out.stdout.split()
        print(f"{backend:<8} {float(secs):8.3f}s  (backend reported: {used})")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d1", type=int, default=64)
    ap.add_argument("--d2", type=int, default=64)
    ap.add_argument("--n", type=int, default=120, help="number of samples")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    bench_kernels(args.d1, args.d2, args.n, args.repeat)
    bench_fit(args.d1, args.d2, args.n, args.repeat)


if __name__ == "__main__":
    main()

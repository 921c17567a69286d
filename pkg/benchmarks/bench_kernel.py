"""Compare the compiled and pure-Python node-store kernels.

Two workloads: a synthetic n-queens constraint build (pure BDD churn) and
symbolic inference over random BERN programs (the package's actual hot
path).  Run:  python benchmarks/bench_kernel.py [--queens 7] [--programs 40]
"""

import argparse
import random
import time

from bernabs import bern, engine, formula as fm, kernel, randgen
from bernabs import bdd as bddm


def queens_workload(n, backend):
    """Board constraint: exactly one queen per row, no attacks."""
    u = fm.make_universe(
        [(f"q{r}_{c}", fm.VarKind.PREDICATE) for r in range(n) for c in range(n)],
        backend=backend,
    )
    cell = [[bddm.var_bdd(u, u.var(f"q{r}_{c}")) for c in range(n)] for r in range(n)]
    acc = bddm.true_bdd(u)
    for r in range(n):
        row = bddm.false_bdd(u)
        for c in range(n):
            only = cell[r][c]
            for c2 in range(n):
                if c2 != c:
                    only = only & ~cell[r][c2]
            row = row | only
        acc = acc & row
    for r in range(n):
        for c in range(n):
            for r2 in range(r + 1, n):
                acc = acc & ~(cell[r][c] & cell[r2][c])
                for dc in (c - (r2 - r), c + (r2 - r)):
                    if 0 <= dc < n:
                        acc = acc & ~(cell[r][c] & cell[r2][dc])
    return acc.count_models(list(u.variables))


def inference_workload(programs, backend, seed):
    rng = random.Random(seed)
    total = 0
    for _ in range(programs):
        names = tuple(f"v{i}" for i in range(3))
        prog = randgen.rand_bern_program(rng, names, max_flips=10, max_stmts=10)
        init = {n: rng.random() < 0.5 for n in names}
        run = engine.run_symbolic(prog, init=init, backend=backend)
        for name in names:
            if run.survival() > 0:
                total += engine.query(run, bern.BVar(name)).probability.numerator
    return total


def timed(fn, *args):
    t0 = time.perf_counter()
    result = fn(*args)
    return result, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--queens", type=int, default=7)
    ap.add_argument("--programs", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = kernel.available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; benchmarking pure only")

    rows = []
    for backend in backends:
        count, dt = timed(queens_workload, args.queens, backend)
        rows.append((f"{args.queens}-queens build+count", backend, dt, f"{count} solutions"))
    for backend in backends:
        total, dt = timed(inference_workload, args.programs, backend, args.seed)
        rows.append((f"symbolic inference x{args.programs}", backend, dt, f"checksum {total}"))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'backend':<9} {'seconds':>8}  result")
    for name, backend, dt, note in rows:
        print(f"{name:<{width}}  {backend:<9} {dt:>8.3f}  {note}")
    by_load = {}
    for name, backend, dt, _ in rows:
        by_load.setdefault(name, {})[backend] = dt
    for name, times in by_load.items():
        if "compiled" in times and "pure" in times:
            print(f"{name}: compiled is {times['pure'] / times['compiled']:.1f}x faster")


if __name__ == "__main__":
    main()

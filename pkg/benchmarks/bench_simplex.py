"""Compare the compiled simplex kernel with the numpy fallback.

    python3 benchmarks/bench_simplex.py [--repeat N]

Times LP relaxations of generated models of growing size, then a full
branch-and-bound solve on a few toy instances, once per backend.
"""
import argparse
import statistics
import sys
import time

from dhplan.milp import assemble
from dhplan.solver import SolveConfig, branch_and_bound, compile_lp, lp as lp_module
from dhplan.solver import kernel
from dhplan.solver.lp import DenseSimplex
from dhplan.synthetic import generate_synthetic_instance, toy_uc_instance


def _median(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def bench_lp(backends, repeat):
    print(f"{'LP relaxation':<28}{'rows':>6}{'cols':>6}" + "".join(f"{b:>12}" for b in backends)
          + f"{'speedup':>10}")
    for steps in (6, 12, 24, 48):
        model = assemble(*generate_synthetic_instance(1, 2, 1, steps, 0))
        lp = compile_lp(model, "cost")
        row = []
        iters = set()
        for k in backends.values():
            t, out = _median(lambda: DenseSimplex(lp.A, lp.row_lo, lp.row_hi, lp.col_lo,
                                                  lp.col_hi, lp.c, kernel=k).solve(), repeat)
            row.append(t)
            iters.add(out.iterations)
        assert len(iters) == 1, "backends took different pivot paths"
        label = f"gen(1,2,1,{steps})"
        speed = f"{row[0] / row[-1]:.1f}x" if len(row) > 1 else ""
        print(f"{label:<28}{lp.A.shape[0]:>6}{lp.A.shape[1]:>6}"
              + "".join(f"{t * 1e3:>10.1f}ms" for t in row) + f"{speed:>10}")


def bench_bnb(backends, repeat):
    print(f"\n{'branch-and-bound':<28}{'nodes':>12}" + "".join(f"{b:>12}" for b in backends)
          + f"{'speedup':>10}")
    saved = lp_module._kernel
    try:
        for seed in (3, 11, 27):
            model = assemble(*toy_uc_instance(seed))
            row, nodes = [], None
            for k in backends.values():
                lp_module._kernel = k
                t, res = _median(lambda: branch_and_bound(model, SolveConfig(rel_gap=0.0)),
                                 repeat)
                row.append(t)
                nodes = res.node_count
            speed = f"{row[0] / row[-1]:.1f}x" if len(row) > 1 else ""
            print(f"{f'toy seed {seed}':<28}{nodes:>12}"
                  + "".join(f"{t * 1e3:>10.1f}ms" for t in row) + f"{speed:>10}")
    finally:
        lp_module._kernel = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = {"python": kernel.pure}
    if kernel.compiled is not None:
        backends["compiled"] = kernel.compiled
    else:
        print("compiled kernel not available; timing the numpy fallback only", file=sys.stderr)
    bench_lp(backends, args.repeat)
    bench_bnb(backends, args.repeat)


if __name__ == "__main__":
    main()

"""Command-line wrapper around HiGHS (via scipy) speaking the solution-file format.

    python -m dhplan.bridge.highs_runner MODEL.mps SOLUTION.txt [--gap G] [--time-limit S]
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import csr_matrix

from ..milp.model import MilpModel
from .mps import read_mps


def scipy_problem(model: MilpModel, objective: str | None = None):
    """``(c, constant, constraints, integrality, bounds)`` for ``scipy.optimize.milp``."""
    objective = objective or next(iter(model.objectives))
    expr = model.objectives[objective]
    n = model.n_vars
    c = expr.dense(n)
    if model.sense == "max":
        c = -c
    rows, cols, vals = [], [], []
    lo = np.empty(model.n_rows)
    hi = np.empty(model.n_rows)
    for i, row in enumerate(model.constraints):
        for j, a in row.terms:
            rows.append(i)
            cols.append(j)
            vals.append(a)
        lo[i], hi[i] = row.bounds()
    A = csr_matrix((vals, (rows, cols)), shape=(model.n_rows, n))
    integrality = np.array([1 if v.is_binary else 0 for v in model.variables])
    bounds = Bounds([v.lower for v in model.variables], [v.upper for v in model.variables])
    cons = [LinearConstraint(A, lo, hi)] if model.n_rows else []
    return c, expr.constant, cons, integrality, bounds


def solve_highs(model: MilpModel, rel_gap: float = 0.0, time_limit: float = math.inf,
                objective: str | None = None):
    c, _, cons, integrality, bounds = scipy_problem(model, objective)
    options = {"mip_rel_gap": rel_gap, "presolve": True}
    if math.isfinite(time_limit):
        options["time_limit"] = time_limit
    return milp(c, constraints=cons, integrality=integrality, bounds=bounds, options=options)


def solution_lines(model: MilpModel, res, objective: str | None = None) -> list[str]:
    objective = objective or next(iter(model.objectives))
    if res.x is None:
        status = {2: "infeasible", 3: "unbounded"}.get(res.status, "limit_reached")
        return [f"=status= {status}"]
    status = "optimal" if res.status == 0 else "limit_reached"
    bound = getattr(res, "mip_dual_bound", None)
    gap = getattr(res, "mip_gap", None)
    sign = -1.0 if model.sense == "max" else 1.0
    lines = [f"=obj= {float(model.evaluate(objective, res.x))!r}", f"=status= {status}"]
    if bound is not None and math.isfinite(bound):
        lines.append(f"=bound= {float(sign * bound + model.objectives[objective].constant)!r}")
    if gap is not None and math.isfinite(gap):
        lines.append(f"=gap= {max(float(gap), 0.0)!r}")
    lines += [f"{v.name} {float(val)!r}" for v, val in zip(model.variables, res.x)]
    return lines


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dhplan-highs")
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--gap", type=float, default=0.0)
    ap.add_argument("--time-limit", type=float, default=math.inf)
    args = ap.parse_args(argv)
    model = read_mps(args.model)
    res = solve_highs(model, args.gap, args.time_limit)
    with open(args.solution, "w", encoding="utf-8") as fh:
        fh.write("\n".join(solution_lines(model, res)) + "\n")
    print(res.message, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

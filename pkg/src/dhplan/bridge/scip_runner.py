"""Command-line wrapper around SCIP (via PySCIPOpt) speaking the solution-file format.

    python -m dhplan.bridge.scip_runner MODEL.mps SOLUTION.txt [--gap G] [--time-limit S]

SCIP reads the free MPS file directly; it keeps the first N row as the
objective and drops the tagged inactive one.
"""
from __future__ import annotations

import argparse
import math
import sys

FEASTOL = 1e-7  # tighter than the 1e-6 residual audit applied afterwards
_STATUS = {"optimal": "optimal", "gaplimit": "optimal", "infeasible": "infeasible",
           "unbounded": "unbounded", "inforunbd": "infeasible"}


def solve_scip(model_path: str, rel_gap: float = 0.0, time_limit: float = math.inf,
               quiet: bool = True) -> list[str]:
    from pyscipopt import Model

    m = Model()
    if quiet:
        m.hideOutput()
    m.readProblem(model_path)
    m.setParam("limits/gap", rel_gap)
    m.setParam("numerics/feastol", FEASTOL)
    m.setParam("randomization/randomseedshift", 0)
    # undercover can spend minutes at the root of capped commitment models while
    # RENS finds a near-optimal incumbent in seconds
    m.setParam("heuristics/undercover/freq", -1)
    if math.isfinite(time_limit):
        m.setParam("limits/time", time_limit)
    m.optimize()
    status = m.getStatus()
    if m.getNSols() == 0:
        return [f"=status= {_STATUS.get(status, 'limit_reached')}"]
    best = m.getBestSol()
    lines = [f"=obj= {float(m.getSolObjVal(best))!r}",
             f"=status= {_STATUS.get(status, 'limit_reached')}"]
    bound = m.getDualbound()
    if math.isfinite(bound):
        lines.append(f"=bound= {float(bound)!r}")
    gap = m.getGap()
    if math.isfinite(gap):
        lines.append(f"=gap= {max(float(gap), 0.0)!r}")
    lines += [f"{v.name} {float(m.getSolVal(best, v))!r}" for v in m.getVars(transformed=False)]
    return lines


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="dhplan-scip")
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--gap", type=float, default=0.0)
    ap.add_argument("--time-limit", type=float, default=math.inf)
    args = ap.parse_args(argv)
    lines = solve_scip(args.model, args.gap, args.time_limit)
    with open(args.solution, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

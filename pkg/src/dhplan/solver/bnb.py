"""LP relaxation and branch-and-bound over the binary variables."""
from __future__ import annotations

import heapq
import math
import time

import numpy as np

from ..milp.model import MilpModel
from .lp import LpData, compile_lp, solve_dense
from .result import SolveConfig, SolveResult, relative_gap


def _names(model: MilpModel) -> tuple[str, ...]:
    return tuple(v.name for v in model.variables)


def _finish(model, lp: LpData, status, x, internal_obj, internal_bound, gap, nodes, iters, t0,
            message=""):
    objs = {}
    if x is not None:
        objs = {k: e.value(x) for k, e in model.objectives.items()}
    return SolveResult(
        status=status,
        values=x,
        names=_names(model),
        objective_value=lp.flip * internal_obj if x is not None else math.nan,
        objectives=objs,
        best_bound=lp.flip * internal_bound,
        rel_gap=gap,
        node_count=nodes,
        iteration_count=iters,
        wall_time=time.perf_counter() - t0,
        message=message,
    )


def _lp_opts(config: SolveConfig) -> dict:
    return {"piv_tol": config.lp_pivot_tolerance}


def solve_lp(model: MilpModel, config: SolveConfig | None = None, objective: str | None = None,
             sense: str | None = None) -> SolveResult:
    """Solve the continuous relaxation (binaries relaxed to [0, 1])."""
    config = config or SolveConfig()
    t0 = time.perf_counter()
    lp = compile_lp(model, objective, sense, config.max_nonzeros)
    out = solve_dense(lp, **_lp_opts(config))
    if out.status != "optimal":
        bound = -math.inf if out.status == "unbounded" else math.nan
        return _finish(model, lp, out.status, None, math.nan, bound, math.inf, 0,
                       out.iterations, t0)
    return _finish(model, lp, "optimal", out.x, out.objective, out.objective, 0.0, 0,
                   out.iterations, t0)


class _PseudoCosts:
    def __init__(self, n):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def update(self, j, up, gain, delta):
        if delta > 1e-12 and math.isfinite(gain):
            self.sum[int(up), j] += max(gain, 0.0) / delta
            self.cnt[int(up), j] += 1

    def estimate(self, j, up):
        k = int(up)
        if self.cnt[k, j]:
            return self.sum[k, j] / self.cnt[k, j]
        seen = self.cnt[k] > 0
        return float(self.sum[k, seen].sum() / self.cnt[k, seen].sum()) if seen.any() else 1.0


def _pick_branch(x, frac_idx, rule, pcost):
    fr = x[frac_idx] - np.floor(x[frac_idx])
    if rule == "pseudo-cost":
        best, choice = -1.0, None
        for j, f in zip(frac_idx, fr):
            score = max(pcost.estimate(j, False) * f, 1e-6) * max(pcost.estimate(j, True) * (1 - f), 1e-6)
            if score > best + 1e-12:
                best, choice = score, int(j)
        return choice
    # most fractional; argmax returns the lowest index on ties
    return int(frac_idx[np.argmax(-np.abs(fr - 0.5))])


def branch_and_bound(model: MilpModel, config: SolveConfig | None = None,
                     objective: str | None = None, sense: str | None = None) -> SolveResult:
    """Best-bound search with depth-first plunging; stops at ``config.rel_gap``.

    Pruning uses only an absolute tolerance, so a smaller gap explores a
    superset of the node sequence and never returns a worse incumbent.
    """
    config = config or SolveConfig()
    t0 = time.perf_counter()
    lp = compile_lp(model, objective, sense, config.max_nonzeros)
    bins = lp.binaries
    opts = _lp_opts(config)
    tol_int = config.integer_tolerance
    pcost = _PseudoCosts(lp.A.shape[1])

    inc_x, inc = None, math.inf
    nodes = iters = 0
    heap: list = []
    seq = 0
    # (parent bound, fixes, branching info)
    current = (-math.inf, (), None)

    def prune_tol():
        return 1e-9 * max(1.0, abs(inc)) if math.isfinite(inc) else 0.0

    status = None
    while True:
        if current is None:
            while heap and heap[0][0] >= inc - prune_tol():
                heapq.heappop(heap)
            if not heap:
                break
            bound, _, fixes, info = heapq.heappop(heap)
            current = (bound, fixes, info)
        parent_bound, fixes, info = current
        lb = min(parent_bound, heap[0][0]) if heap else parent_bound
        if inc_x is not None:
            gap = relative_gap(inc, lb)
            if gap <= config.rel_gap and gap > 0:
                status = "gap_reached"
                break
        if nodes >= config.node_limit or time.perf_counter() - t0 > config.time_limit:
            status = "limit_reached"
            break

        lo = lp.col_lo.copy()
        hi = lp.col_hi.copy()
        for j, v in fixes:
            lo[j] = hi[j] = v
        out = solve_dense(lp, lo, hi, **opts)
        nodes += 1
        iters += out.iterations
        if out.status == "unbounded":
            if nodes == 1:
                return _finish(model, lp, "unbounded", None, math.nan, -math.inf, math.inf,
                               nodes, iters, t0)
            current = None
            continue
        if info is not None:
            j, up, delta, pobj = info
            pcost.update(j, up, out.objective - pobj if out.x is not None else math.inf, delta)
        if out.x is None or out.objective >= inc - prune_tol():
            current = None
            continue
        xb = out.x[bins]
        frac_mask = np.abs(xb - np.round(xb)) > tol_int
        if not frac_mask.any():
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[bins] = hi2[bins] = np.round(xb)
            pol = solve_dense(lp, lo2, hi2, **opts)
            iters += pol.iterations
            if pol.x is not None and pol.objective < inc - prune_tol():
                inc, inc_x = pol.objective, pol.x
                inc_x[bins] = np.round(inc_x[bins])
            current = None
            continue
        j = _pick_branch(out.x, bins[frac_mask], config.branching, pcost)
        v = out.x[j]
        first_up = v >= 0.5
        kids = [(1.0 if first_up else 0.0), (0.0 if first_up else 1.0)]
        deltas = {1.0: math.ceil(v) - v, 0.0: v - math.floor(v)}
        seq += 1
        other = kids[1]
        heapq.heappush(heap, (out.objective, seq, fixes + ((j, other),),
                              (j, other == 1.0, deltas[other], out.objective)))
        current = (out.objective, fixes + ((j, kids[0]),),
                   (j, kids[0] == 1.0, deltas[kids[0]], out.objective))

    if inc_x is None:
        if status == "limit_reached":
            return _finish(model, lp, status, None, math.nan, -math.inf, math.inf, nodes,
                           iters, t0, "no incumbent before limit")
        return _finish(model, lp, "infeasible", None, math.nan, math.nan, math.inf, nodes,
                       iters, t0)
    if status is None:
        return _finish(model, lp, "optimal", inc_x, inc, inc, 0.0, nodes, iters, t0)
    open_bounds = [h[0] for h in heap]
    if current is not None:
        open_bounds.append(current[0])
    bound = min([inc] + open_bounds)
    gap = relative_gap(inc, bound)
    if status == "gap_reached" and gap == 0.0:
        status = "optimal"
    return _finish(model, lp, status, inc_x, inc, bound, gap, nodes, iters, t0)

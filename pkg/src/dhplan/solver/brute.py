"""Exhaustive enumeration oracle over all binary assignments.

Assignments are screened with row-activity intervals before any LP is solved:
a row whose binary part cannot be completed by the continuous part within
its bounds proves that assignment infeasible. Every surviving assignment gets
an exact LP with the binaries fixed.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..milp.model import MilpModel
from .bnb import _finish, solve_lp
from .lp import compile_lp, solve_dense
from .result import SolveConfig, SolveResult

CHUNK = 1 << 15


def _assignments(nb: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(nb - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(float)


def brute_force(model: MilpModel, binary_limit: int = 20, config: SolveConfig | None = None,
                objective: str | None = None, sense: str | None = None) -> SolveResult:
    config = config or SolveConfig(rel_gap=0.0)
    bins = model.binaries
    if len(bins) > binary_limit:
        raise ValueError(f"{len(bins)} binaries exceed the enumeration limit {binary_limit}")
    if not bins:
        return solve_lp(model, config, objective, sense)
    t0 = time.perf_counter()
    lp = compile_lp(model, objective, sense, config.max_nonzeros)
    b = lp.binaries
    nb = len(b)
    cont = np.setdiff1d(np.arange(lp.A.shape[1]), b)
    Ac = lp.A[:, cont]
    lo_c, hi_c = lp.col_lo[cont], lp.col_hi[cont]
    with np.errstate(invalid="ignore"):
        lo_terms = np.where(Ac > 0, Ac * lo_c, np.where(Ac < 0, Ac * hi_c, 0.0))
        hi_terms = np.where(Ac > 0, Ac * hi_c, np.where(Ac < 0, Ac * lo_c, 0.0))
    cmin = lo_terms.sum(axis=1)
    cmax = hi_terms.sum(axis=1)
    Ab = lp.A[:, b]
    tol = 1e-9 * (1.0 + np.abs(lp.A).sum(axis=1))
    blo, bhi = lp.col_lo[b], lp.col_hi[b]

    best_x, best = None, math.inf
    lps = iters = 0
    for start in range(0, 1 << nb, CHUNK):
        X = _assignments(nb, start, min(1 << nb, start + CHUNK))
        ok = np.all((X >= blo - 1e-12) & (X <= bhi + 1e-12), axis=1)
        if Ab.shape[0]:
            act = X @ Ab.T
            ok &= np.all(act + cmax >= lp.row_lo - tol, axis=1)
            ok &= np.all(act + cmin <= lp.row_hi + tol, axis=1)
        for row in X[ok]:
            lo, hi = lp.col_lo.copy(), lp.col_hi.copy()
            lo[b] = hi[b] = row
            out = solve_dense(lp, lo, hi, piv_tol=config.lp_pivot_tolerance)
            lps += 1
            iters += out.iterations
            if out.status == "unbounded":
                return _finish(model, lp, "unbounded", None, math.nan, -math.inf, math.inf,
                               lps, iters, t0)
            if out.x is not None and (best_x is None
                                      or out.objective < best - 1e-9 * max(1.0, abs(best))):
                best, best_x = out.objective, out.x
    if best_x is None:
        return _finish(model, lp, "infeasible", None, math.nan, math.nan, math.inf, lps,
                       iters, t0)
    return _finish(model, lp, "optimal", best_x, best, best, 0.0, lps, iters, t0,
                   f"{lps} LPs over {1 << nb} assignments")

"""Dense bounded-variable two-phase primal simplex.

Rows are written as ``A x - s = 0`` with each slack ``s_i`` carrying the row
activity interval as its bounds. The initial basis is the slack identity,
patched with artificials where a slack would start outside its interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..milp.model import MilpModel
from . import kernel as _kernel
from ._simplex_py import AT_LOWER, AT_UPPER, BASIC, FIXED, FREE, ITER_LIMIT, UNBOUNDED


class NumericalError(RuntimeError):
    pass


class ModelTooLargeError(ValueError):
    pass


@dataclass
class LpData:
    """Dense numeric form of a model for one objective (always minimised)."""

    A: np.ndarray
    row_lo: np.ndarray
    row_hi: np.ndarray
    col_lo: np.ndarray
    col_hi: np.ndarray
    c: np.ndarray
    c0: float
    binaries: np.ndarray
    flip: float = 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def compile_lp(model: MilpModel, objective: str | None = None, sense: str | None = None,
               max_nonzeros: int | None = None) -> LpData:
    objective = objective or next(iter(model.objectives))
    sense = sense or model.sense
    if max_nonzeros is not None and model.nonzeros > max_nonzeros:
        raise ModelTooLargeError(
            f"model has {model.nonzeros} nonzeros (> {max_nonzeros}); use the external bridge"
        )
    m, n = model.n_rows, model.n_vars
    A = np.zeros((m, n))
    lo = np.empty(m)
    hi = np.empty(m)
    for i, row in enumerate(model.constraints):
        for j, a in row.terms:
            A[i, j] += a
        lo[i], hi[i] = row.bounds()
    col_lo = np.array([v.lower for v in model.variables], dtype=float)
    col_hi = np.array([v.upper for v in model.variables], dtype=float)
    expr = model.objectives[objective]
    flip = -1.0 if sense == "max" else 1.0
    c = flip * expr.dense(n)
    return LpData(A, lo, hi, col_lo, col_hi, c, flip * expr.constant,
                  np.array(model.binaries, dtype=np.int64), flip)


@dataclass
class LpOutcome:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


def _initial_value(lo: float, hi: float) -> tuple[float, int]:
    if lo == hi:
        return lo, FIXED
    if math.isfinite(lo):
        return lo, AT_LOWER
    if math.isfinite(hi):
        return hi, AT_UPPER
    return 0.0, FREE


class DenseSimplex:
    """One LP solve; owns its tableau exclusively."""

    def __init__(self, A, row_lo, row_hi, col_lo, col_hi, c, *, opt_tol=1e-9, piv_tol=1e-9,
                 feas_tol=1e-9, bland_after=50, refactor_every=400, kernel=None):
        self.A = A
        self.m, self.n = A.shape
        self.row_lo, self.row_hi = row_lo, row_hi
        self.col_lo, self.col_hi = col_lo, col_hi
        self.c = c
        self.opt_tol, self.piv_tol, self.feas_tol = opt_tol, piv_tol, feas_tol
        self.bland_after = bland_after
        self.refactor_every = refactor_every
        self.iterate = (kernel or _kernel).iterate
        self.iterations = 0

    def _setup(self):
        m, n = self.m, self.n
        A = self.A
        xs = np.zeros(n)
        st = np.zeros(n, dtype=np.int8)
        for j in range(n):
            xs[j], st[j] = _initial_value(self.col_lo[j], self.col_hi[j])
        act = A @ xs if m else np.zeros(0)
        scale = 1.0 + (np.abs(act).max() if m else 0.0)
        tol = 1e-9 * scale
        need_art = []
        slack_x = np.empty(m)
        slack_st = np.zeros(m, dtype=np.int8)
        signs = []
        for i in range(m):
            lo, hi = self.row_lo[i], self.row_hi[i]
            if lo - tol <= act[i] <= hi + tol:
                slack_x[i] = act[i]
                slack_st[i] = BASIC
            else:
                bound = lo if act[i] < lo else hi
                slack_x[i] = bound
                slack_st[i] = FIXED if lo == hi else (AT_LOWER if bound == lo else AT_UPPER)
                need_art.append(i)
                signs.append(1.0 if bound - act[i] > 0 else -1.0)
        k = len(need_art)
        ncol = n + m + k
        M = np.zeros((m, ncol))
        M[:, :n] = A
        M[np.arange(m), n + np.arange(m)] = -1.0
        art_x = np.zeros(k)
        basis = n + np.arange(m, dtype=np.int64)
        for q, (i, sg) in enumerate(zip(need_art, signs)):
            M[i, n + m + q] = sg
            art_x[q] = abs(slack_x[i] - act[i])
            basis[i] = n + m + q
        self.M = M
        self.lo = np.concatenate([self.col_lo, self.row_lo, np.zeros(k)])
        self.hi = np.concatenate([self.col_hi, self.row_hi, np.full(k, np.inf)])
        self.x = np.concatenate([xs, slack_x, art_x])
        self.state = np.concatenate([st, slack_st, np.zeros(k, dtype=np.int8)])
        self.basis = basis
        self.n_art = k
        diag = M[np.arange(m), basis]
        self.T = np.ascontiguousarray(M / diag[:, None]) if m else np.zeros((0, ncol))

    def _reduced_costs(self, cost):
        return np.ascontiguousarray(cost - cost[self.basis] @ self.T) if self.m else cost.copy()

    def _refactor(self):
        """Rebuild tableau and basic values from the original matrix."""
        B = self.M[:, self.basis]
        self.T = np.ascontiguousarray(np.linalg.solve(B, self.M))
        nb = np.ones(self.M.shape[1], dtype=bool)
        nb[self.basis] = False
        rhs = -(self.M[:, nb] @ self.x[nb])
        self.x[self.basis] = np.linalg.solve(B, rhs)

    def _run(self, cost, limit):
        d = self._reduced_costs(cost)
        while True:
            chunk = min(self.refactor_every, limit - self.iterations)
            if chunk <= 0:
                return ITER_LIMIT
            code, it = self.iterate(self.T, d, self.x, self.lo, self.hi, self.basis, self.state,
                                    chunk, self.opt_tol, self.piv_tol, self.feas_tol,
                                    self.bland_after)
            self.iterations += it
            if code != ITER_LIMIT:
                return code
            self._refactor()
            d = self._reduced_costs(cost)

    def _residual(self) -> float:
        if not self.m:
            return 0.0
        return float(np.abs(self.M @ self.x).max())

    def solve(self, max_iter: int | None = None) -> LpOutcome:
        self._setup()
        limit = max_iter or 50 * (self.m + self.n + 10)
        m, n, k = self.m, self.n, self.n_art
        if k:
            cost1 = np.zeros(n + m + k)
            cost1[n + m:] = 1.0
            code = self._run(cost1, limit)
            if code == ITER_LIMIT:
                return LpOutcome("limit_reached", None, math.nan, self.iterations)
            infeas = float(self.x[n + m:].sum())
            scale = 1.0 + float(np.abs(self.x[:n + m]).max(initial=0.0))
            if infeas > 1e-7 * scale:
                self._refactor()
                infeas = float(self.x[n + m:].sum())
                if infeas > 1e-7 * scale:
                    return LpOutcome("infeasible", None, math.nan, self.iterations)
            art = slice(n + m, n + m + k)
            self.hi[art] = 0.0
            self.x[art] = np.where(self.state[art] == BASIC, self.x[art], 0.0)
            self.state[art] = np.where(self.state[art] == BASIC, BASIC, FIXED)
        cost2 = np.zeros(n + m + k)
        cost2[:n] = self.c
        code = self._run(cost2, limit)
        if code == UNBOUNDED:
            return LpOutcome("unbounded", None, -math.inf, self.iterations)
        if code == ITER_LIMIT:
            return LpOutcome("limit_reached", None, math.nan, self.iterations)
        scale = 1.0 + float(np.abs(self.x).max(initial=0.0))
        if self._residual() > 1e-9 * scale:
            self._refactor()
            if self._residual() > 1e-6 * scale:
                raise NumericalError(f"row residual {self._residual():.3g} after refactorization")
        x = self.x[:n].copy()
        # basic values may sit a hair outside their bounds; snap structurals
        np.clip(x, self.col_lo, self.col_hi, out=x)
        return LpOutcome("optimal", x, float(self.c @ x), self.iterations)


def solve_dense(lp: LpData, col_lo=None, col_hi=None, **opts) -> LpOutcome:
    lo = lp.col_lo if col_lo is None else col_lo
    hi = lp.col_hi if col_hi is None else col_hi
    if np.any(lo > hi):
        return LpOutcome("infeasible", None, math.nan, 0)
    out = DenseSimplex(lp.A, lp.row_lo, lp.row_hi, lo, hi, lp.c, **opts).solve()
    if out.x is not None:
        out.objective += lp.c0
    return out

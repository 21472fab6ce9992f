"""Lexicographic cost/emission sweep.

The cost-optimal anchor is solved first. Each relaxation step then adds the
row ``cost <= anchor + step * |anchor|`` to the same assembled model and
minimizes emissions. Solvers are plain callables taking a :class:`SolveRequest`,
which keeps the driver testable with replay mocks and call recorders.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

from .milp import MilpModel, assemble
from .solver import SolveConfig, SolveResult, branch_and_bound
from .solver.audit import audit_solution
from .system import MultiEnergySystem, Scenario

DEFAULT_STEPS = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30)
DEFAULT_GAPS = {0.01: 0.02, 0.05: 0.01}
DEFAULT_GAP = 0.005
CAP_SLACK = 1e-9
CLASSES = ("robust", "target-dependent", "rejected")


class AnchorError(RuntimeError):
    def __init__(self, result: SolveResult):
        self.result = result
        super().__init__(f"cost anchor solve ended with status {result.status}")


@dataclass(frozen=True)
class SolveRequest:
    model: MilpModel
    objective: str
    config: SolveConfig
    step: float | None = None  # None for the anchor solve


Solver = Callable[[SolveRequest], SolveResult]


def builtin_solver(request: SolveRequest) -> SolveResult:
    return branch_and_bound(request.model, request.config, request.objective)


def external_solver(adapter) -> Solver:
    from .bridge.external import run_external

    def solve(request: SolveRequest) -> SolveResult:
        return run_external(request.model, adapter, request.config, request.objective)
    return solve


def auto_solver(adapter=None) -> Solver:
    """Builtin for desk-size models, external adapter above the builtin's nonzero cap."""
    from .bridge.external import default_adapter
    ext = external_solver(adapter or default_adapter())

    def solve(request: SolveRequest) -> SolveResult:
        if request.model.nonzeros > request.config.max_nonzeros:
            return ext(request)
        return builtin_solver(request)
    return solve


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=0, abs_tol=1e-12)


@dataclass(frozen=True)
class SweepConfig:
    relaxation_steps: tuple[float, ...] = DEFAULT_STEPS
    gap_schedule: Mapping[float, float] = field(default_factory=lambda: dict(DEFAULT_GAPS))
    default_gap: float = DEFAULT_GAP
    solver: str = "builtin"
    base: SolveConfig = field(default_factory=SolveConfig)
    workers: int = 1

    def __post_init__(self):
        steps = tuple(float(s) for s in self.relaxation_steps)
        object.__setattr__(self, "relaxation_steps", steps)
        if not steps:
            raise ValueError("at least one relaxation step is required")
        if any(s < 0 for s in steps) or any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("relaxation steps must be non-negative and strictly increasing")
        if self.default_gap < 0 or any(g < 0 for g in self.gap_schedule.values()):
            raise ValueError("gaps must be >= 0")
        if self.solver not in ("builtin", "external", "auto"):
            raise ValueError(f"unknown solver {self.solver!r}")

    def gap_for(self, step: float) -> float:
        for s, g in self.gap_schedule.items():
            if _close(s, step):
                return g
        return self.default_gap

    def config_for(self, step: float) -> SolveConfig:
        return replace(self.base, rel_gap=self.gap_for(step))


@dataclass
class ParetoPoint:
    step: float
    cost: float
    emissions: float
    normalized_cost: float
    normalized_emissions: float
    investment_vector: dict[str, int]
    solve_meta: dict
    cap: float = math.nan
    fragile: tuple[str, ...] = ()
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SolutionCatalog:
    anchor_cost: float
    anchor_emissions: float
    points: list[ParetoPoint]
    classification: dict[str, str]
    labels: dict[str, str] = field(default_factory=dict)
    currency: str = "EUR"
    emission_unit: str = "tCO2"
    anchor_meta: dict = field(default_factory=dict)

    @property
    def investments(self) -> list[str]:
        return list(self.classification)

    def to_dict(self) -> dict:
        return {
            "anchor_cost": self.anchor_cost,
            "anchor_emissions": self.anchor_emissions,
            "currency": self.currency,
            "emission_unit": self.emission_unit,
            "anchor_meta": self.anchor_meta,
            "points": [
                {
                    "step": p.step,
                    "cap": p.cap,
                    "cost": p.cost,
                    "emissions": p.emissions,
                    "normalized_cost": p.normalized_cost,
                    "normalized_emissions": p.normalized_emissions,
                    "investment_vector": p.investment_vector,
                    "fragile": list(p.fragile),
                    "error": p.error,
                    "solve_meta": p.solve_meta,
                }
                for p in self.points
            ],
            "classification": self.classification,
            "labels": self.labels,
        }


def classify_investments(points: Sequence[ParetoPoint] | Sequence[Mapping[str, int]]
                         ) -> dict[str, str]:
    vectors = [p.investment_vector if isinstance(p, ParetoPoint) else p for p in points
               if not (isinstance(p, ParetoPoint) and p.failed)]
    if not vectors:
        raise ValueError("classification needs at least one successful point")
    out = {}
    for inv in vectors[0]:
        picks = [int(v[inv]) for v in vectors]
        if all(picks):
            out[inv] = "robust"
        elif not any(picks):
            out[inv] = "rejected"
        else:
            out[inv] = "target-dependent"
    return out


def cost_cap(anchor_cost: float, step: float) -> float:
    return float(anchor_cost + step * abs(anchor_cost))


def _ratio(value: float, base: float) -> float:
    return float(value / base) if base else math.nan


def investment_vector(model: MilpModel, result: SolveResult, tol: float
                      ) -> tuple[dict[str, int], tuple[str, ...]]:
    vec, fragile = {}, []
    for v in model.vars_of("inv"):
        z = float(result.values[v.index])
        vec[v.key[1]] = int(round(z))
        if abs(z - round(z)) > tol:
            fragile.append(v.key[1])
    return vec, tuple(fragile)


def solve_cost_anchor(model: MilpModel, config: SolveConfig, solver: Solver = builtin_solver
                      ) -> tuple[float, SolveResult]:
    res = solver(SolveRequest(model, "cost", config, None))
    if not res.has_solution:
        raise AnchorError(res)
    return res.objectives.get("cost", res.objective_value), res


def solve_emissions_capped(model: MilpModel, anchor_cost: float, step: float, gap: float,
                           solver: Solver = builtin_solver, anchor_emissions: float = math.nan,
                           base: SolveConfig | None = None) -> ParetoPoint:
    config = replace(base or SolveConfig(), rel_gap=gap)
    cap = cost_cap(anchor_cost, step)
    capped = model.with_rows([model.cap_row("cost", cap, f"cap[cost,{step:g}]")])
    res = solver(SolveRequest(capped, "emissions", config, step))
    meta = res.summary()
    if not res.has_solution:
        if res.status == "infeasible":
            err = "cost cap infeasible although the anchor is feasible (internal inconsistency)"
        else:
            err = f"solve ended with status {res.status}"
        return ParetoPoint(step, math.nan, math.nan, math.nan, math.nan, {}, meta, cap,
                           error=err)
    cost = model.evaluate("cost", res.values)
    emissions = model.evaluate("emissions", res.values)
    vec, fragile = investment_vector(model, res, config.integer_tolerance)
    error = None
    if cost > cap + CAP_SLACK * max(1.0, abs(cap)):
        error = f"audited cost {cost!r} exceeds cap {cap!r}"
    elif res.status == "solver_failure":
        error = res.message or "solver failure"
    else:
        report = audit_solution(capped, res.values, bound_tol=1e-6)
        if report.max_residual > 1e-6:
            error = f"residual {report.max_residual:.3g} at {report.worst_row}"
    return ParetoPoint(step, float(cost), float(emissions), _ratio(cost, anchor_cost),
                       _ratio(emissions, anchor_emissions), vec, meta, cap, fragile, error)


def make_solver(sweep: SweepConfig, adapter=None) -> Solver:
    if sweep.solver == "external":
        from .bridge.external import default_adapter
        return external_solver(adapter or default_adapter())
    if sweep.solver == "auto":
        return auto_solver(adapter)
    return builtin_solver


def run_sweep(sys: MultiEnergySystem | None, scn: Scenario | None,
              sweep: SweepConfig | None = None, solver: Solver | None = None,
              model: MilpModel | None = None, labels: Mapping[str, str] | None = None
              ) -> SolutionCatalog:
    """Anchor solve, then one capped emission solve per relaxation step.

    ``model`` skips assembly (``sys``/``scn`` may then be None); ``labels``
    overrides the investment labels taken from ``sys``.
    """
    sweep = sweep or SweepConfig()
    solver = solver or make_solver(sweep)
    if model is None:
        model = assemble(sys, scn)
    first = sweep.relaxation_steps[0]
    anchor_cost, anchor = solve_cost_anchor(model, sweep.config_for(first), solver)
    anchor_emissions = model.evaluate("emissions", anchor.values)

    def one(step: float) -> ParetoPoint:
        try:
            return solve_emissions_capped(model, anchor_cost, step, sweep.gap_for(step),
                                          solver, anchor_emissions, sweep.base)
        except Exception as exc:  # recorded per point, the catalog is still emitted
            return ParetoPoint(step, math.nan, math.nan, math.nan, math.nan, {}, {},
                               cost_cap(anchor_cost, step), error=f"{type(exc).__name__}: {exc}")

    if sweep.workers > 1:
        with ThreadPoolExecutor(sweep.workers) as pool:
            points = list(pool.map(one, sweep.relaxation_steps))
    else:
        points = [one(s) for s in sweep.relaxation_steps]
    ok = [p for p in points if not p.failed]
    inv_ids = [v.key[1] for v in model.vars_of("inv")]
    # with no successful point there is no evidence for any selection
    classification = classify_investments(ok) if ok else {i: "rejected" for i in inv_ids}
    if labels is None:
        labels = {inv.id: inv.label or inv.id for inv in sys.investments} if sys else {}
    return SolutionCatalog(
        anchor_cost=float(anchor_cost),
        anchor_emissions=float(anchor_emissions),
        points=points,
        classification=classification,
        labels={i: labels.get(i, i) for i in inv_ids},
        currency=scn.currency if scn else "EUR",
        emission_unit=scn.emission_unit if scn else "tCO2",
        anchor_meta=anchor.summary(),
    )

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STATUSES = ("optimal", "infeasible", "unbounded", "gap_reached", "limit_reached",
            "solver_failure")


@dataclass(frozen=True)
class SolveConfig:
    rel_gap: float = 0.005
    time_limit: float = math.inf
    node_limit: int = 1_000_000
    integer_tolerance: float = 1e-6
    lp_pivot_tolerance: float = 1e-9
    branching: str = "most-fractional"
    max_nonzeros: int = 50_000

    def __post_init__(self):
        if self.rel_gap < 0:
            raise ValueError("rel_gap must be >= 0")
        if not (self.integer_tolerance > 0 and self.lp_pivot_tolerance > 0):
            raise ValueError("tolerances must be > 0")
        if self.branching not in ("most-fractional", "pseudo-cost"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class SolveResult:
    status: str
    values: np.ndarray | None
    names: tuple[str, ...]
    objective_value: float = math.nan
    objectives: dict[str, float] = field(default_factory=dict)
    best_bound: float = math.nan
    rel_gap: float = math.inf
    node_count: int = 0
    iteration_count: int = 0
    wall_time: float = 0.0
    message: str = ""

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    @property
    def assignment(self) -> dict[str, float]:
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values.tolist()))

    def value(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def summary(self) -> dict:
        return {
            "status": self.status,
            "objective_value": self.objective_value,
            "best_bound": self.best_bound,
            "rel_gap": self.rel_gap,
            "node_count": self.node_count,
            "iteration_count": self.iteration_count,
            "wall_time": self.wall_time,
        }


def relative_gap(incumbent: float, bound: float) -> float:
    if not math.isfinite(incumbent):
        return math.inf
    diff = incumbent - bound
    if diff <= 1e-9 * max(1.0, abs(incumbent)):
        return 0.0
    return diff / max(abs(incumbent), 1e-10)

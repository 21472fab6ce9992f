"""Re-evaluate a solution against every row, bound and integrality requirement."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..milp.model import MilpModel
from ..system import MultiEnergySystem, evaluate_pwl


@dataclass
class AuditReport:
    max_residual: float
    worst_row: str | None
    bound_violations: list[tuple[str, float, float, float]] = field(default_factory=list)
    integrality_violations: list[tuple[str, float]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.bound_violations and not self.integrality_violations


def _as_vector(model: MilpModel, assignment) -> np.ndarray:
    if isinstance(assignment, Mapping):
        missing = [v.name for v in model.variables if v.name not in assignment]
        if missing:
            raise KeyError(f"assignment misses {len(missing)} variables, first: {missing[:10]}")
        return np.array([assignment[v.name] for v in model.variables], dtype=float)
    x = np.asarray(assignment, dtype=float)
    if x.shape != (model.n_vars,):
        raise ValueError(f"assignment has shape {x.shape}, model has {model.n_vars} variables")
    return x


def audit_solution(model: MilpModel, assignment: Mapping[str, float] | Sequence[float],
                   bound_tol: float = 1e-9, integer_tolerance: float = 1e-6) -> AuditReport:
    x = _as_vector(model, assignment)
    worst, worst_row = 0.0, None
    for row in model.constraints:
        a = row.activity(x)
        lo, hi = row.bounds()
        r = max(lo - a, a - hi, 0.0)
        if r > worst:
            worst, worst_row = r, row.name
    report = AuditReport(worst, worst_row)
    for v, val in zip(model.variables, x):
        if val < v.lower - bound_tol or val > v.upper + bound_tol:
            report.bound_violations.append((v.name, float(val), v.lower, v.upper))
        if v.is_binary and abs(val - round(val)) > integer_tolerance:
            report.integrality_violations.append((v.name, float(val)))
    return report


def pwl_consistency(sys: MultiEnergySystem, model: MilpModel, assignment) -> float:
    """Largest |x_out - curve(x_in)| over committed unit-steps."""
    x = _as_vector(model, assignment)
    worst = 0.0
    for u in sys.units:
        for t in sys.steps:
            if x[model.index(("z", u.id, None, t))] < 0.5:
                continue
            for conv in u.conversions:
                curve = conv.curve_at(t)
                xin = x[model.index(("x_in", u.id, conv.input, t))]
                xin = min(max(xin, curve.inputs[0]), curve.inputs[-1])
                xout = x[model.index(("x_out", u.id, conv.output, t))]
                worst = max(worst, abs(xout - evaluate_pwl(curve, xin)))
    return worst

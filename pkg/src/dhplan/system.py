"""Domain model of a multi-energy district heating system.

Everything here is an immutable value object. The MILP builder reads these
types; nothing in this module knows about solvers.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

INF = math.inf

RESOURCE_KINDS = ("heat", "power", "fuel")
NODE_KINDS = ("balance", "demand", "market")


class CurveRangeError(ValueError):
    """Input outside the breakpoint domain of a characteristic curve."""


@dataclass(frozen=True)
class Resource:
    id: str
    kind: str = "heat"


@dataclass(frozen=True)
class TimeGrid:
    step_count: int
    step_hours: float = 1.0
    start_label: str = ""

    @property
    def steps(self) -> range:
        return range(self.step_count)

    @property
    def hours(self) -> float:
        return self.step_count * self.step_hours


@dataclass(frozen=True)
class PwlCurve:
    """Piecewise linear input -> output map given by ordered breakpoints."""

    breakpoints: tuple[tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "breakpoints", tuple((float(a), float(b)) for a, b in self.breakpoints)
        )

    @property
    def inputs(self) -> tuple[float, ...]:
        return tuple(p[0] for p in self.breakpoints)

    @property
    def outputs(self) -> tuple[float, ...]:
        return tuple(p[1] for p in self.breakpoints)

    @property
    def is_linear(self) -> bool:
        return len(self.breakpoints) == 2

    @classmethod
    def linear(cls, max_input: float, efficiency: float, name: str = "") -> "PwlCurve":
        return cls(((0.0, 0.0), (max_input, max_input * efficiency)), name)


def evaluate_pwl(curve: PwlCurve, x: float) -> float:
    """Evaluate ``curve`` at ``x`` by linear interpolation between breakpoints."""
    xs = curve.inputs
    if x < xs[0] or x > xs[-1]:
        label = curve.name or "curve"
        raise CurveRangeError(f"{label}: input {x} outside [{xs[0]}, {xs[-1]}]")
    k = bisect.bisect_left(xs, x)
    if xs[k] == x:
        return curve.breakpoints[k][1]
    (x0, y0), (x1, y1) = curve.breakpoints[k - 1], curve.breakpoints[k]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass(frozen=True)
class Conversion:
    """One input -> output resource conversion of a generating unit.

    ``curve_table`` optionally holds one curve per time step; when absent the
    time-invariant ``curve`` applies at every step.
    """

    input: str
    output: str
    curve: PwlCurve
    curve_table: tuple[PwlCurve, ...] | None = None

    def curve_at(self, t: int) -> PwlCurve:
        if self.curve_table is None:
            return self.curve
        return self.curve_table[t]

    def curves(self) -> tuple[PwlCurve, ...]:
        return (self.curve,) if self.curve_table is None else self.curve_table


@dataclass(frozen=True)
class GeneratorUnit:
    id: str
    node: str
    conversions: tuple[Conversion, ...]
    min_uptime_steps: int = 0
    min_downtime_steps: int = 0
    ramp_up: float = INF
    ramp_down: float = INF
    output_bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    fixed_running_cost: float = 0.0
    startup_cost: float = 0.0
    variable_cost: dict[str, float] = field(default_factory=dict)
    emission_factor: dict[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "conversions", tuple(self.conversions))

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(c.input for c in self.conversions))

    @property
    def outputs(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(c.output for c in self.conversions))

    def bounds_for(self, resource: str) -> tuple[float, float]:
        return self.output_bounds.get(resource, (0.0, INF))


@dataclass(frozen=True)
class StorageUnit:
    id: str
    node: str
    resource: str
    loss_factor: float | tuple[float, ...] = 1.0
    load_eff: float = 1.0
    unload_eff: float = 1.0
    level_bounds: tuple[float, float] = (0.0, INF)
    charge_bounds: tuple[float, float] = (0.0, INF)
    discharge_bounds: tuple[float, float] = (0.0, INF)
    initial_level: float = 0.0
    cyclic: bool = False

    def loss_at(self, t: int) -> float:
        if isinstance(self.loss_factor, (int, float)):
            return float(self.loss_factor)
        return float(self.loss_factor[t])


@dataclass(frozen=True)
class Market:
    id: str
    resource: str
    node: str
    purchase_bounds: tuple[float, float] = (0.0, INF)
    sale_bounds: tuple[float, float] = (0.0, 0.0)
    purchase_emission_factor: float = 0.0


@dataclass(frozen=True)
class Node:
    id: str
    kind: str = "balance"


@dataclass(frozen=True)
class Edge:
    id: str
    source: str
    target: str
    resource: str
    capacity: float = INF
    directed: bool = True


@dataclass(frozen=True)
class InvestmentOption:
    id: str
    enabled_entities: tuple[str, ...]
    capex: float
    depreciation_years: int = 25
    annual_fixed_cost: float = 0.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "enabled_entities", tuple(self.enabled_entities))

    def run_cost(self, horizon_fraction: float) -> float:
        """Straight-line annuity of the capex plus fixed cost, pro-rated to the horizon."""
        return (
            self.capex * horizon_fraction / self.depreciation_years
            + self.annual_fixed_cost * horizon_fraction
        )


@dataclass(frozen=True)
class MultiEnergySystem:
    resources: tuple[Resource, ...]
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    units: tuple[GeneratorUnit, ...]
    storages: tuple[StorageUnit, ...]
    markets: tuple[Market, ...]
    investments: tuple[InvestmentOption, ...]
    time_grid: TimeGrid
    name: str = "system"

    def __post_init__(self):
        for name in ("resources", "nodes", "edges", "units", "storages", "markets", "investments"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def steps(self) -> range:
        return self.time_grid.steps

    def candidate_of(self) -> dict[str, str]:
        """Map unit/storage id -> id of the investment that unlocks it."""
        out: dict[str, str] = {}
        for inv in self.investments:
            for ent in inv.enabled_entities:
                out.setdefault(ent, inv.id)
        return out


@dataclass(frozen=True)
class Scenario:
    """Time series bound to system entities.

    ``demand`` is keyed by ``(node, resource)``; prices are keyed by market id.
    """

    demand: dict[tuple[str, str], tuple[float, ...]]
    purchase_price: dict[str, tuple[float, ...]] = field(default_factory=dict)
    sale_price: dict[str, tuple[float, ...]] = field(default_factory=dict)
    horizon_fraction: float | None = None
    currency: str = "EUR"
    emission_unit: str = "tCO2"

    def fraction_for(self, grid: TimeGrid) -> float:
        if self.horizon_fraction is not None:
            return self.horizon_fraction
        return grid.hours / 8760.0


@dataclass(frozen=True)
class Diagnostic:
    entity: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        tail = f" ({self.detail})" if self.detail else ""
        return f"{self.entity}: {self.rule}{tail}"


def min_updown_windows(unit: GeneratorUnit, t: int) -> tuple[range, range]:
    """Steps whose start (resp. stop) events still bind the status at ``t``."""
    up = max(unit.min_uptime_steps, 1)
    down = max(unit.min_downtime_steps, 1)
    return range(max(0, t - up + 1), t + 1), range(max(0, t - down + 1), t + 1)


def _series_ok(series: Sequence[float] | None, n: int) -> bool:
    return series is not None and len(series) == n


def _bounds_ordered(b: tuple[float, float]) -> bool:
    return b[0] <= b[1]


def _check_curve(curve: PwlCurve, owner: str) -> Iterable[Diagnostic]:
    bps = curve.breakpoints
    if len(bps) < 2:
        yield Diagnostic(owner, "curve needs at least 2 breakpoints")
        return
    xs = curve.inputs
    if any(b <= a for a, b in zip(xs, xs[1:])):
        yield Diagnostic(owner, "curve inputs not strictly increasing")
    if any(v < 0 or not math.isfinite(v) for p in bps for v in p):
        yield Diagnostic(owner, "curve coordinates must be finite and >= 0")


def validate_system(sys: MultiEnergySystem, scn: Scenario) -> list[Diagnostic]:
    """Check every structural invariant and cross reference; returns diagnostics."""
    out: list[Diagnostic] = []
    grid = sys.time_grid
    if grid.step_count < 1:
        out.append(Diagnostic("time_grid", "step_count must be >= 1"))
    if not grid.step_hours > 0:
        out.append(Diagnostic("time_grid", "step_hours must be > 0"))
    n = grid.step_count

    groups = {
        "resource": [r.id for r in sys.resources],
        "node": [x.id for x in sys.nodes],
        "edge": [e.id for e in sys.edges],
        "entity": [u.id for u in sys.units] + [k.id for k in sys.storages],
        "market": [m.id for m in sys.markets],
        "investment": [i.id for i in sys.investments],
    }
    for group, ids in groups.items():
        seen: set[str] = set()
        for i in ids:
            if i in seen:
                out.append(Diagnostic(i, f"duplicate {group} id"))
            seen.add(i)
            if not i or any(ch.isspace() for ch in i):
                out.append(Diagnostic(repr(i), "ids must be non-empty without whitespace"))

    resources = set(groups["resource"])
    nodes = set(groups["node"])
    for r in sys.resources:
        if r.kind not in RESOURCE_KINDS:
            out.append(Diagnostic(r.id, "unknown resource kind", r.kind))
    for nd in sys.nodes:
        if nd.kind not in NODE_KINDS:
            out.append(Diagnostic(nd.id, "unknown node kind", nd.kind))

    def where(owner: str, node: str, res: Iterable[str]):
        if node not in nodes:
            out.append(Diagnostic(owner, "unknown node", node))
        for r in res:
            if r not in resources:
                out.append(Diagnostic(owner, "unknown resource", r))

    for e in sys.edges:
        for end in (e.source, e.target):
            if end not in nodes:
                out.append(Diagnostic(e.id, "edge endpoint missing", end))
        if e.resource not in resources:
            out.append(Diagnostic(e.id, "unknown resource", e.resource))
        if not e.capacity >= 0:
            out.append(Diagnostic(e.id, "capacity must be >= 0"))

    for u in sys.units:
        where(u.id, u.node, [r for c in u.conversions for r in (c.input, c.output)])
        if not u.conversions:
            out.append(Diagnostic(u.id, "unit needs at least one conversion"))
        for c in u.conversions:
            if c.curve_table is not None and len(c.curve_table) != n:
                out.append(Diagnostic(u.id, "series length mismatch", "curve_table"))
            for curve in c.curves():
                out.extend(_check_curve(curve, u.id))
        outs = [c.output for c in u.conversions]
        if len(outs) != len(set(outs)):
            out.append(Diagnostic(u.id, "output resource produced by several conversions"))
        for r, b in u.output_bounds.items():
            if r not in u.outputs:
                out.append(Diagnostic(u.id, "bounds for resource the unit does not output", r))
            if not _bounds_ordered(b) or b[0] < 0:
                out.append(Diagnostic(u.id, "c_min <= c_max violated", r))
        if not (u.ramp_up >= 0 and u.ramp_down >= 0):
            out.append(Diagnostic(u.id, "ramp limits must be >= 0"))
        for label, v in (("min_uptime", u.min_uptime_steps), ("min_downtime", u.min_downtime_steps)):
            if v < 0 or (v > 0 and v >= n):
                out.append(Diagnostic(u.id, f"{label} must be in [0, step_count)"))

    for k in sys.storages:
        where(k.id, k.node, [k.resource])
        lo, hi = k.level_bounds
        if not (lo <= k.initial_level <= hi):
            out.append(Diagnostic(k.id, "c_min <= initial_level <= c_max violated"))
        if lo < 0:
            out.append(Diagnostic(k.id, "level bounds must be >= 0"))
        for eff in (k.load_eff, k.unload_eff):
            if not (0 < eff <= 1):
                out.append(Diagnostic(k.id, "efficiency out of (0,1]"))
        losses = [k.loss_factor] if isinstance(k.loss_factor, (int, float)) else list(k.loss_factor)
        if not isinstance(k.loss_factor, (int, float)) and len(losses) != n:
            out.append(Diagnostic(k.id, "series length mismatch", "loss_factor"))
        if any(not 0 <= a <= 1 for a in losses):
            out.append(Diagnostic(k.id, "loss factor out of [0,1]"))
        for b in (k.charge_bounds, k.discharge_bounds):
            if not _bounds_ordered(b) or b[0] < 0:
                out.append(Diagnostic(k.id, "flow bounds must be ordered and >= 0"))

    for m in sys.markets:
        where(m.id, m.node, [m.resource])
        for b in (m.purchase_bounds, m.sale_bounds):
            if not _bounds_ordered(b) or b[0] < 0:
                out.append(Diagnostic(m.id, "market bounds must be ordered and >= 0"))
        if not _series_ok(scn.purchase_price.get(m.id), n):
            out.append(Diagnostic(m.id, "series length mismatch", "purchase_price"))
        sale = scn.sale_price.get(m.id)
        if (sale is not None or m.sale_bounds[1] > 0) and not _series_ok(sale, n):
            out.append(Diagnostic(m.id, "series length mismatch", "sale_price"))

    entities = {u.id: u for u in sys.units}
    stores = {k.id: k for k in sys.storages}
    unlocked: set[str] = set()
    for inv in sys.investments:
        if inv.capex < 0:
            out.append(Diagnostic(inv.id, "capex must be >= 0"))
        if inv.depreciation_years < 1:
            out.append(Diagnostic(inv.id, "depreciation_years must be >= 1"))
        for ent in inv.enabled_entities:
            if ent not in entities and ent not in stores:
                out.append(Diagnostic(inv.id, "unknown enabled entity", ent))
            if ent in unlocked:
                out.append(Diagnostic(inv.id, "entity unlocked by several investments", ent))
            unlocked.add(ent)
            k = stores.get(ent)
            if k is not None:
                if k.level_bounds[0] > 0 or k.initial_level > 0:
                    out.append(Diagnostic(ent, "candidate storage must allow an empty level"))
                caps = (k.level_bounds[1], k.charge_bounds[1], k.discharge_bounds[1])
                if not all(math.isfinite(c) for c in caps):
                    out.append(Diagnostic(ent, "candidate storage needs finite capacities"))
                if k.charge_bounds[0] > 0 or k.discharge_bounds[0] > 0:
                    out.append(Diagnostic(ent, "candidate storage must allow zero flow"))

    for (node, res), series in scn.demand.items():
        owner = f"demand[{node},{res}]"
        if node not in nodes:
            out.append(Diagnostic(owner, "unknown node", node))
        if res not in resources:
            out.append(Diagnostic(owner, "unknown resource", res))
        if len(series) != n:
            out.append(Diagnostic(owner, "series length mismatch", f"{len(series)} != {n}"))
        if any(not (v >= 0 and math.isfinite(v)) for v in series):
            out.append(Diagnostic(owner, "demand must be finite and >= 0"))
    with_demand = {node for node, _ in scn.demand}
    for nd in sys.nodes:
        if nd.kind == "demand" and nd.id not in with_demand:
            out.append(Diagnostic(nd.id, "demand node has no demand series"))
    if scn.horizon_fraction is not None and not scn.horizon_fraction > 0:
        out.append(Diagnostic("scenario", "horizon_fraction must be > 0"))
    return out

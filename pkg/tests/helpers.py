"""Hand-built fixtures shared by several test modules."""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from dhplan.milp import BINARY, MilpModel, ModelBuilder
from dhplan.solver import SolveResult
from dhplan.system import (
    Conversion,
    Edge,
    GeneratorUnit,
    InvestmentOption,
    Market,
    MultiEnergySystem,
    Node,
    PwlCurve,
    Resource,
    Scenario,
    StorageUnit,
    TimeGrid,
)

# published front coordinates, (normalized cost, normalized emissions) per step
FRONT_POINTS = [(1.01, 1.00), (1.05, 0.90), (1.10, 0.82), (1.15, 0.78), (1.20, 0.73),
               (1.25, 0.70), (1.30, 0.67)]
FRONT_STEPS = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30)

# published selection matrix with the printed labels
SELECTION_MATRIX = [
    ("CHP", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("CHP", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Block CHP", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("CCGT", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Heating station (biomass)", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Gas turbine upgrade", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Gas turbine", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Gas turbine", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Gas turbine", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Gas turbine", (1, 1, 1, 1, 1, 1, 1), "robust"),
    ("Gas turbine", (1, 1, 1, 0, 0, 0, 0), "target-dependent"),
    ("Electrical heater (120 MW)", (0, 0, 0, 0, 0, 1, 1), "target-dependent"),
]


def knapsack_model() -> MilpModel:
    """max 3a + 2b s.t. a + b <= 1, a, b binary."""
    b = ModelBuilder("knapsack")
    a = b.add_var("a", kind=BINARY)
    c = b.add_var("b", kind=BINARY)
    b.add_row("cap", "cap", [(a, 1.0), (c, 1.0)], "<=", 1.0)
    b.set_objective("value", [(a, 3.0), (c, 2.0)])
    m = b.freeze()
    return MilpModel(m.variables, m.constraints, m.objectives, sense="max", name="knapsack")


def single_unit_system(steps=2, curve=None, **unit_kw):
    """1 unit, 1 market, 1 edge: the 14-variable counting fixture at T=2."""
    curve = curve or PwlCurve(((0.0, 0.0), (10.0, 8.0)))
    unit = GeneratorUnit("u1", "A", (Conversion("gas", "heat", curve),), **unit_kw)
    sys = MultiEnergySystem(
        [Resource("heat", "heat"), Resource("gas", "fuel")],
        [Node("A", "balance"), Node("D", "demand")],
        [Edge("e1", "A", "D", "heat", capacity=20.0)],
        [unit], [], [Market("gm", "gas", "A")], [], TimeGrid(steps),
    )
    scn = Scenario({("D", "heat"): tuple([4.0] * steps)}, {"gm": tuple([30.0] * steps)},
                   horizon_fraction=1.0)
    return sys, scn


def flip_instance(steps=2, demand=10.0):
    """Coal, gas and a candidate biomass boiler on one demand node.

    Coal at 50/MWh is the cost anchor (1000 for 20 MWh). Biomass has the same
    fuel price but an annualized capex of 100, so the zero-emission portfolio
    costs exactly 10% more. Gas at 60/MWh is the in-between emitter.
    """
    heat = Resource("heat", "heat")
    fuels = [Resource(f, "fuel") for f in ("coal", "gas", "biomass")]
    cap = 2 * demand

    def boiler(uid, fuel):
        return GeneratorUnit(uid, "B", (Conversion(fuel, "heat", PwlCurve.linear(cap, 1.0)),),
                             label=f"{fuel} boiler")

    units = [boiler("coal_b", "coal"), boiler("gas_b", "gas"), boiler("bio_b", "biomass")]
    markets = [Market("buy_coal", "coal", "B", purchase_emission_factor=1.0),
               Market("buy_gas", "gas", "B", purchase_emission_factor=0.5),
               Market("buy_biomass", "biomass", "B", purchase_emission_factor=0.0)]
    inv = InvestmentOption("inv_bio", ("bio_b",), capex=2500.0, depreciation_years=25,
                           label="Heating station (biomass)")
    sys = MultiEnergySystem([heat] + fuels, [Node("B", "demand")], [], units, [], markets,
                            [inv], TimeGrid(steps), name="flip")
    prices = {"buy_coal": (50.0,) * steps, "buy_gas": (60.0,) * steps,
              "buy_biomass": (50.0,) * steps}
    return sys, Scenario({("B", "heat"): (demand,) * steps}, prices, horizon_fraction=1.0)


def zero_demand_instance(steps=2):
    unit = GeneratorUnit("u", "B", (Conversion("gas", "heat", PwlCurve.linear(10.0, 0.9)),),
                         variable_cost={"gas": 1.0}, emission_factor={"gas": 0.2})
    sys = MultiEnergySystem([Resource("heat", "heat"), Resource("gas", "fuel")],
                            [Node("B", "demand")], [], [unit], [],
                            [Market("gm", "gas", "B")], [], TimeGrid(steps))
    return sys, Scenario({("B", "heat"): (0.0,) * steps}, {"gm": (30.0,) * steps})


def storage_only_system(steps=3, **kw):
    st = StorageUnit("st", "B", "heat", **kw)
    sys = MultiEnergySystem([Resource("heat", "heat")], [Node("B", "balance")], [], [], [st],
                            [], [], TimeGrid(steps))
    return sys, Scenario({})


def random_milp(seed: int, n=None, m=None, feasible: bool = True) -> MilpModel:
    """Random mixed model with ranged rows, free and fixed columns, two objectives.

    With ``feasible`` every row is built to hold at a hidden point, so the
    model has at least one integer-feasible solution.
    """
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, 12))
    m = m or int(rng.integers(1, 10))
    b = ModelBuilder(f"rand{seed}")
    idx, point = [], []
    for j in range(n):
        r = rng.random()
        if r < 0.4:
            idx.append(b.add_var("y", f"v{j}", kind=BINARY))
            point.append(float(rng.integers(0, 2)))
        elif r < 0.5:
            idx.append(b.add_var("x", f"v{j}", lower=-math.inf, upper=math.inf))
            point.append(float(rng.normal() * 3))
        elif r < 0.6:
            v = float(rng.normal())
            idx.append(b.add_var("x", f"v{j}", lower=v, upper=v))
            point.append(v)
        elif r < 0.7:
            hi = float(rng.uniform(1, 5))
            idx.append(b.add_var("x", f"v{j}", lower=-math.inf, upper=hi))
            point.append(hi - float(rng.exponential(2)))
        else:
            lo, hi = float(rng.uniform(-3, 0)), float(rng.uniform(1, 10))
            idx.append(b.add_var("x", f"v{j}", lower=lo, upper=hi))
            point.append(float(rng.uniform(lo, hi)))
    ranges = {}
    for i in range(m):
        cols = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        terms = [(idx[c], float(rng.normal() * 10.0 ** rng.integers(-3, 4))) for c in cols]
        sense = ["<=", ">=", "="][int(rng.integers(0, 3))]
        act = sum(a * point[j] for j, a in terms)
        slack = float(rng.exponential(2))
        if not feasible:
            rhs = float(rng.normal() * 5)
        elif sense == "<=":
            rhs = act + slack
        elif sense == ">=":
            rhs = act - slack
        else:
            rhs = act
        if sense != "=" and rng.random() < 0.3:
            ranges[i] = slack + float(rng.uniform(0.5, 5))
        b.add_row("rand", f"r{i}", terms, sense, rhs)
    b.set_objective("cost", [(j, float(rng.normal())) for j in idx], float(rng.normal()))
    b.set_objective("emissions", [(j, float(rng.random())) for j in idx[: n // 2 + 1]])
    model = b.freeze()
    rows = tuple(replace(row, range_=ranges[i]) if i in ranges else row
                 for i, row in enumerate(model.constraints))
    return MilpModel(model.variables, rows, model.objectives, name=model.name)


def models_equal(a: MilpModel, b: MilpModel, tol=1e-12) -> list[str]:
    """Structural differences between two models (empty when equal)."""
    diffs = []
    if a.n_vars != b.n_vars or a.n_rows != b.n_rows:
        return [f"shape {a.n_vars}x{a.n_rows} vs {b.n_vars}x{b.n_rows}"]
    for u, v in zip(a.variables, b.variables):
        if (u.name, u.kind, u.lower, u.upper) != (v.name, v.kind, v.lower, v.upper):
            diffs.append(f"column {u.name}: {u} vs {v}")
    for r, s in zip(a.constraints, b.constraints):
        if r.name != s.name or r.bounds() != s.bounds():
            diffs.append(f"row {r.name}: bounds {r.bounds()} vs {s.bounds()}")
        da, db = dict(r.terms), dict(s.terms)
        if set(da) != set(db) or any(abs(da[k] - db[k]) > tol * max(1, abs(da[k])) for k in da):
            diffs.append(f"row {r.name}: coefficients differ")
    if list(a.objectives) != list(b.objectives):
        diffs.append(f"objectives {list(a.objectives)} vs {list(b.objectives)}")
    for k in a.objectives:
        if k in b.objectives:
            ea, eb = a.objectives[k], b.objectives[k]
            da, db = dict(ea.terms), dict(eb.terms)
            da = {j: c for j, c in da.items() if c}
            db = {j: c for j, c in db.items() if c}
            if da.keys() != db.keys() or any(abs(da[j] - db[j]) > tol for j in da):
                diffs.append(f"objective {k}: coefficients differ")
            if abs(ea.constant - eb.constant) > tol:
                diffs.append(f"objective {k}: constant differs")
    return diffs


def replay_mock():
    """(model, solver) pair replaying the published front and selection matrix at anchor cost 100."""
    b = ModelBuilder("replay")
    c = b.add_var("c", "cost")
    e = b.add_var("c", "emissions")
    invs = [b.add_var("inv", f"i{q:02d}", kind=BINARY) for q in range(len(SELECTION_MATRIX))]
    b.set_objective("cost", [(c, 1.0)])
    b.set_objective("emissions", [(e, 1.0)])
    model = b.freeze()
    anchor = 100.0
    calls = []

    def solver(request):
        calls.append(request)
        x = np.zeros(request.model.n_vars)
        if request.step is None:
            x[c], x[e] = anchor, 100.0
            col = 0
        else:
            col = min(range(len(FRONT_STEPS)), key=lambda k: abs(FRONT_STEPS[k] - request.step))
            nc, ne = FRONT_POINTS[col]
            x[c], x[e] = nc * anchor, ne * 100.0
        for q, (_, row, _) in enumerate(SELECTION_MATRIX):
            x[invs[q]] = row[col]
        names = tuple(v.name for v in request.model.variables)
        objs = {k: ex.value(x) for k, ex in request.model.objectives.items()}
        return SolveResult("optimal", x, names, objs[request.objective], objs,
                           objs[request.objective], 0.0)

    labels = {f"i{q:02d}": name for q, (name, _, _) in enumerate(SELECTION_MATRIX)}
    return model, solver, calls, labels

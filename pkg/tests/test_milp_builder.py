import math
from dataclasses import replace

import numpy as np
import pytest

from dhplan.milp import ValidationError, assemble, build_variables, ModelBuilder
from dhplan.milp.build import build_balance, build_ramping
from dhplan.solver import SolveConfig, branch_and_bound, brute_force
from dhplan.synthetic import generate_synthetic_instance
from dhplan.system import (
    Conversion,
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

from helpers import single_unit_system, storage_only_system, zero_demand_instance

EXACT = SolveConfig(rel_gap=0.0)


def _count_vars(sys):
    b = ModelBuilder()
    build_variables(b, sys)
    return len(b.variables)


def test_variable_counts():
    sys, _ = single_unit_system(steps=2)
    assert _count_vars(sys) == 14
    sys, _ = storage_only_system(steps=3)
    assert _count_vars(sys) == 9
    empty = MultiEnergySystem([], [], [], [], [], [], [], TimeGrid(1))
    assert _count_vars(empty) == 0


def test_binary_variables_bounded():
    sys, scn = single_unit_system()
    m = assemble(sys, scn)
    for v in m.variables:
        if v.is_binary:
            assert (v.lower, v.upper) == (0.0, 1.0)
    assert m.self_check() == []


def _balance_rows(sys, scn):
    b = ModelBuilder()
    build_variables(b, sys)
    return build_balance(b, sys, scn), b


def test_balance_counts():
    unit = GeneratorUnit("u", "N", (Conversion("gas", "heat", PwlCurve.linear(10, 1.0)),))
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("N", "demand")],
                            [], [unit], [], [Market("m", "gas", "N")], [], TimeGrid(24))
    scn = Scenario({("N", "heat"): (1.0,) * 24}, {"m": (1.0,) * 24})
    n, _ = _balance_rows(sys, replace(scn, demand={("N", "heat"): (1.0,) * 24}))
    assert n == 48  # gas and heat balance at the node
    heat_only = MultiEnergySystem([Resource("heat")], [Node("N", "demand")], [], [],
                                  [StorageUnit("s", "N", "heat", level_bounds=(0, 1))], [], [],
                                  TimeGrid(24))
    n, _ = _balance_rows(heat_only, Scenario({("N", "heat"): (0.0,) * 24}))
    assert n == 24


def test_balance_three_nodes_two_resources():
    nodes = [Node(f"n{i}", "balance") for i in range(3)]
    stores = [StorageUnit(f"s{i}{r}", f"n{i}", r, level_bounds=(0, 1))
              for i in range(3) for r in ("heat", "power")]
    sys = MultiEnergySystem([Resource("heat"), Resource("power", "power")], nodes, [], [],
                            stores, [], [], TimeGrid(2))
    n, _ = _balance_rows(sys, Scenario({}))
    assert n == 12


def test_degenerate_balance_row_flagged():
    sys = MultiEnergySystem([Resource("heat")], [Node("D", "demand")], [], [], [], [], [],
                            TimeGrid(2))
    n, b = _balance_rows(sys, Scenario({("D", "heat"): (0.0, 0.0)}))
    assert n == 2
    assert [d.rule for d in b.diagnostics] == ["degenerate row", "degenerate row"]


def test_linear_curve_single_equality():
    sys, scn = single_unit_system(steps=1)
    m = assemble(sys, scn)
    rows = m.rows_in("conversion")
    assert len(rows) == 1
    terms = {m.variables[j].name: a for j, a in rows[0].terms}
    assert terms == {"x_out[u1,heat,0]": 1.0, "x_in[u1,gas,0]": pytest.approx(-0.8)}
    assert rows[0].sense == "=" and rows[0].rhs == 0.0


def test_three_breakpoint_encoding_counts():
    curve = PwlCurve(((0, 0), (5, 4), (10, 7)))
    sys, scn = single_unit_system(steps=1, curve=curve)
    m = assemble(sys, scn)
    assert len(m.vars_of("lam")) == 3
    segs = m.vars_of("seg")
    assert len(segs) == 2 and all(v.is_binary for v in segs)
    # convexity, segment choice, one adjacency row per breakpoint, two links
    assert len(m.rows_in("conversion")) == 3 + 4


def test_pwl_inversion():
    # [DERIVED] evaluate_pwl(curve, 7.5) == 5.5, so min x_in at x_out = 5.5 is 7.5
    curve = PwlCurve(((0, 0), (5, 4), (10, 7)))
    unit = GeneratorUnit("u", "B", (Conversion("gas", "heat", curve),),
                         variable_cost={"gas": 1.0})
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("B", "demand")],
                            [], [unit], [], [Market("m", "gas", "B")], [], TimeGrid(1))
    scn = Scenario({("B", "heat"): (5.5,)}, {"m": (0.0,)})
    m = assemble(sys, scn)
    res = branch_and_bound(m, EXACT)
    assert res.value("x_in[u,gas,0]") == pytest.approx(7.5, abs=1e-7)


def _startup_model(steps, **unit_kw):
    unit = GeneratorUnit("u", "B", (Conversion("gas", "heat", PwlCurve.linear(10, 1.0)),),
                         output_bounds={"heat": (1.0, 10.0)}, **unit_kw)
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("B", "demand")],
                            [], [unit], [], [Market("m", "gas", "B"),
                                             Market("hm", "heat", "B", sale_bounds=(0, 100))],
                            [], TimeGrid(steps))
    scn = Scenario({("B", "heat"): (0.0,) * steps},
                   {"m": (0.0,) * steps, "hm": (100.0,) * steps}, {"hm": (0.0,) * steps})
    return assemble(sys, scn)


def _fix(model, pattern, values):
    """Pin binaries by name via extra equality rows."""
    from dhplan.milp import LinConstraint
    rows = [LinConstraint(f"fix[{n}]", ((model.index(n), 1.0),), "=", v)
            for n, v in zip(pattern, values)]
    return model.with_rows(rows)


def test_startup_indicator_follows_commitment():
    m = _startup_model(4)
    pinned = _fix(m, [f"z[u,{t}]" for t in range(4)], (0, 1, 1, 0))
    res = brute_force(pinned)
    assert [round(res.value(f"s[u,{t}]")) for t in range(4)] == [0, 1, 0, 0]
    off = brute_force(_fix(m, [f"z[u,{t}]" for t in range(4)], (0, 0, 0, 0)))
    assert all(off.value(f"s[u,{t}]") == 0 for t in range(4))
    assert all(abs(off.value(f"x_out[u,heat,{t}]")) < 1e-9 for t in range(4))
    first = brute_force(_fix(m, ["z[u,0]"], (1,)))
    assert round(first.value("s[u,0]")) == 1


def test_min_uptime_window():
    # [DERIVED] brute-force enumeration over 5-step schedules
    m = _startup_model(5, min_uptime_steps=3)
    started = _fix(m, ["z[u,0]", "z[u,1]", "z[u,2]"], (0, 0, 1))
    res = brute_force(started)
    assert [round(res.value(f"z[u,{t}]")) for t in (2, 3, 4)] == [1, 1, 1]
    stop_early = _fix(started, ["z[u,3]"], (0,))
    assert brute_force(stop_early).status == "infeasible"


def test_min_downtime_window():
    m = _startup_model(4, min_downtime_steps=2)
    assert m.vars_of("sd")
    stopped = _fix(m, ["z[u,0]", "z[u,1]"], (1, 0))
    assert brute_force(_fix(stopped, ["z[u,2]"], (1,))).status == "infeasible"
    assert brute_force(_fix(stopped, ["z[u,2]"], (0,))).status == "optimal"


def test_min_uptime_zero_vacuous():
    m = _startup_model(4, min_uptime_steps=0)
    assert m.rows_in("min_updown") == []


def test_ramping_counts():
    unit = GeneratorUnit("u", "B", (Conversion("gas", "heat", PwlCurve.linear(10, 1.0)),),
                         ramp_up=2.0, ramp_down=2.0)
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("B")], [],
                            [unit], [], [], [], TimeGrid(24))
    b = ModelBuilder()
    build_variables(b, sys)
    assert build_ramping(b, sys) == 46
    free = replace(sys, units=(replace(unit, ramp_up=math.inf, ramp_down=math.inf),))
    b = ModelBuilder()
    build_variables(b, free)
    assert build_ramping(b, free) == 0


def test_ramp_limit_binding():
    # [DERIVED] hand-checked 2-step LP: x_0 fixed 0, ramp 2 caps x_1 at 2
    unit = GeneratorUnit("u", "B", (Conversion("gas", "heat", PwlCurve.linear(10, 1.0)),),
                         ramp_up=2.0, ramp_down=2.0)
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("B", "demand")],
                            [], [unit], [], [Market("m", "gas", "B"),
                                             Market("sell", "heat", "B", purchase_bounds=(0, 0),
                                                    sale_bounds=(0, 100))], [], TimeGrid(2))
    scn = Scenario({("B", "heat"): (0.0, 0.0)}, {"m": (0.0, 0.0), "sell": (0.0, 0.0)},
                   sale_price={"sell": (0.0, 1.0)})
    m = assemble(sys, scn)
    m = _fix(m, ["z[u,0]", "z[u,1]", "x_out[u,heat,0]"], (1, 1, 0))
    res = branch_and_bound(m, EXACT)
    assert res.value("x_out[u,heat,1]") == pytest.approx(2.0, abs=1e-9)


def _storage_levels(steps, charge, discharge, **kw):
    sys, _ = storage_only_system(steps, **kw)
    sys = replace(sys, markets=(Market("hm", "heat", "B", sale_bounds=(0, 100)),))
    m = assemble(sys, Scenario({}, {"hm": (0.0,) * steps}, {"hm": (0.0,) * steps}))
    from dhplan.milp import LinConstraint
    rows = []
    for t in range(steps):
        rows.append(LinConstraint(f"c{t}", ((m.index(f"ch[st,{t}]"), 1.0),), "=", charge[t]))
        rows.append(LinConstraint(f"d{t}", ((m.index(f"dis[st,{t}]"), 1.0),), "=",
                                  discharge[t]))
    res = branch_and_bound(m.with_rows(rows), EXACT, "cost")
    return res, [res.value(f"h[st,{t}]") for t in range(steps)] if res.has_solution else None


def test_storage_recursion():
    _, h = _storage_levels(2, (5, 0), (0, 3), level_bounds=(0, 10))
    assert h == pytest.approx([5, 2])
    _, h = _storage_levels(3, (0, 0, 0), (0, 0, 0), loss_factor=0.9, initial_level=10,
                           level_bounds=(0, 20))
    assert h == pytest.approx([10, 9, 8.1])


def test_zero_capacity_storage():
    sys, _ = storage_only_system(3, level_bounds=(0, 0), charge_bounds=(0, 0),
                                 discharge_bounds=(0, 0))
    m = assemble(sys, Scenario({}))
    for v in m.variables:
        assert (v.lower, v.upper) == (0.0, 0.0)


def test_investment_linking_rows():
    sys, scn = single_unit_system(steps=24)
    cand = replace(sys, investments=(InvestmentOption("i", ("u1",), 1000.0),))
    m = assemble(cand, scn)
    rows = m.rows_in("investment")
    assert len(rows) == 24
    assert all(r.sense == "<=" for r in rows)
    assert assemble(sys, scn).rows_in("investment") == []


def test_unselected_investment_never_commits():
    sys, scn = single_unit_system(steps=3)
    sys = replace(sys, investments=(InvestmentOption("i", ("u1",), 0.0),),
                  markets=sys.markets + (Market("hm", "heat", "D"),))
    scn = replace(scn, purchase_price={"gm": (1.0,) * 3, "hm": (500.0,) * 3})
    m = _fix(assemble(sys, scn), ["inv[i]"], (0,))
    res = brute_force(m)
    assert all(res.value(f"z[u1,{t}]") == 0 for t in range(3))
    assert all(res.value(f"x_out[u1,heat,{t}]") == 0 for t in range(3))


def test_objective_arithmetic():
    sys, scn = zero_demand_instance()
    m = assemble(sys, scn)
    res = branch_and_bound(m, EXACT)
    assert res.objective_value == 0.0
    assert np.all(res.values == 0)
    must = MultiEnergySystem([Resource("gas", "fuel")], [Node("B", "demand")], [], [], [],
                             [Market("g", "gas", "B", purchase_emission_factor=0.2)], [],
                             TimeGrid(1))
    m = assemble(must, Scenario({("B", "gas"): (10.0,)}, {"g": (30.0,)}))
    res = branch_and_bound(m, EXACT)
    assert res.objectives["cost"] == pytest.approx(300.0)
    assert res.objectives["emissions"] == pytest.approx(2.0)


def test_sales_do_not_earn_emission_credit():
    sys, scn = single_unit_system()
    m = assemble(sys, scn)
    e_vars = {v.index for v in m.vars_of("e")}
    assert not e_vars & {j for j, _ in m.objectives["emissions"].terms}


def test_assembly_deterministic_and_self_checked():
    a = assemble(*generate_synthetic_instance(1, 1, 0, 2, 0))
    b = assemble(*generate_synthetic_instance(1, 1, 0, 2, 0))
    assert a.self_check() == []
    assert [v.name for v in a.variables] == [v.name for v in b.variables]
    assert a.constraints == b.constraints


def test_toy_counts_match_closed_form():
    # [DERIVED] per-builder counting rules summed by hand for this layout
    units = [GeneratorUnit(f"u{i}", "B",
                           (Conversion("gas", "heat", PwlCurve.linear(10, 0.9)),),
                           output_bounds={"heat": (2.0, 9.0)}, ramp_up=3.0, ramp_down=3.0)
             for i in range(2)]
    st = StorageUnit("st", "B", "heat", level_bounds=(0, 20), charge_bounds=(0, 5),
                     discharge_bounds=(0, 5))
    T = 24
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("B", "demand")],
                            [], units, [st], [Market("m", "gas", "B")], [], TimeGrid(T))
    scn = Scenario({("B", "heat"): (5.0,) * T}, {"m": (20.0,) * T})
    m = assemble(sys, scn)
    per_unit_vars = 4  # x_in, x_out, z, s
    assert m.n_vars == T * (2 * per_unit_vars + 3 + 2)
    balance = 2 * T
    conversion = 2 * T
    startup = 2 * (3 * T - 1)
    capacity = 2 * 2 * T  # x_out <= cmax z and x_out >= cmin z
    input_caps = 2 * T  # in_hi only, the curve input starts at 0
    ramping = 2 * 2 * (T - 1)
    storage = T
    counted = balance + conversion + startup + capacity + input_caps + ramping + storage
    assert m.n_rows == counted
    assert len(m.binaries) == 2 * 2 * T


def test_invalid_system_raises():
    sys, scn = single_unit_system()
    bad = replace(scn, demand={("D", "heat"): (1.0,)})
    with pytest.raises(ValidationError) as exc:
        assemble(sys, bad)
    assert exc.value.diagnostics

import math

import numpy as np
import pytest
from scipy.optimize import milp

from dhplan.bridge.highs_runner import scipy_problem
from dhplan.milp import BINARY, ModelBuilder, assemble
from dhplan.solver import (
    ModelTooLargeError,
    SolveConfig,
    audit_solution,
    branch_and_bound,
    brute_force,
    compile_lp,
    pwl_consistency,
    solve_lp,
)
from dhplan.solver import kernel
from dhplan.solver.lp import DenseSimplex
from dhplan.synthetic import toy_uc_instance
from dhplan.system import Conversion, GeneratorUnit, Market, MultiEnergySystem, Node, PwlCurve
from dhplan.system import Resource, Scenario, TimeGrid

from helpers import knapsack_model, random_milp, zero_demand_instance

EXACT = SolveConfig(rel_gap=0.0)


def _lp(build):
    b = ModelBuilder()
    build(b)
    return b.freeze()


def test_bound_only_lp():
    def build(b):
        x = b.add_var("x", lower=3.0)
        b.set_objective("f", [(x, 1.0)])
    res = solve_lp(_lp(build))
    assert res.status == "optimal"
    assert res.objective_value == pytest.approx(3.0)


def test_single_row_lp():
    def build(b):
        x, y = b.add_var("x"), b.add_var("y")
        b.add_row("r", "r", [(x, 1.0), (y, 1.0)], "<=", 1.0)
        b.set_objective("f", [(x, 1.0), (y, 1.0)])
    res = solve_lp(_lp(build), sense="max")
    assert res.objective_value == pytest.approx(1.0)


def test_infeasible_and_unbounded_lp():
    def infeasible(b):
        x = b.add_var("x", upper=1.0)
        b.add_row("r", "r", [(x, 1.0)], ">=", 2.0)
        b.set_objective("f", [(x, 1.0)])

    def unbounded(b):
        x = b.add_var("x", lower=-math.inf)
        b.set_objective("f", [(x, 1.0)])
    assert solve_lp(_lp(infeasible)).status == "infeasible"
    assert solve_lp(_lp(unbounded)).status == "unbounded"
    assert branch_and_bound(_lp(infeasible)).status == "infeasible"


def test_knapsack():
    m = knapsack_model()
    assert branch_and_bound(m, EXACT).objective_value == pytest.approx(3.0)
    assert brute_force(m).objective_value == pytest.approx(3.0)
    assert solve_lp(m).objective_value >= 3.0 - 1e-9


def test_brute_force_without_binaries_matches_lp():
    def build(b):
        x, y = b.add_var("x", upper=4), b.add_var("y", upper=4)
        b.add_row("r", "r", [(x, 1.0), (y, 2.0)], ">=", 3.0)
        b.set_objective("f", [(x, 2.0), (y, 1.5)])
    m = _lp(build)
    assert brute_force(m).objective_value == pytest.approx(solve_lp(m).objective_value)


def test_brute_force_refuses_large_models():
    b = ModelBuilder()
    for j in range(21):
        b.add_var("y", str(j), kind=BINARY)
    b.set_objective("f", [])
    with pytest.raises(ValueError, match="21 binaries"):
        brute_force(b.freeze())


def _commitment_toy():
    unit = GeneratorUnit("u", "B", (Conversion("gas", "heat", PwlCurve.linear(12, 0.9)),),
                         output_bounds={"heat": (3.0, 10.8)}, startup_cost=50.0,
                         variable_cost={"gas": 1.0}, emission_factor={"gas": 0.2})
    sys = MultiEnergySystem([Resource("heat"), Resource("gas", "fuel")], [Node("B", "demand")],
                            [], [unit], [], [Market("g", "gas", "B"),
                                             Market("h", "heat", "B", purchase_bounds=(0, 8))],
                            [], TimeGrid(2))
    scn = Scenario({("B", "heat"): (6.0, 9.0)}, {"g": (20.0, 20.0), "h": (35.0, 30.0)},
                   horizon_fraction=1.0)
    return assemble(sys, scn)


def test_commitment_toy_matches_brute_force():
    # [DERIVED] brute force over the 4 commitment patterns (8 binaries with s)
    m = _commitment_toy()
    bf = brute_force(m)
    bb = branch_and_bound(m, EXACT)
    assert bb.objective_value == pytest.approx(bf.objective_value, rel=1e-9)


def test_relaxation_bounds_integer_optimum():
    for seed in range(5):
        m = assemble(*toy_uc_instance(seed))
        assert solve_lp(m).objective_value <= branch_and_bound(m, EXACT).objective_value + 1e-7


def test_gap_contract_and_monotone():
    m = assemble(*toy_uc_instance(11))
    previous = math.inf
    for gap in (0.5, 0.1, 0.01, 0.0):
        res = branch_and_bound(m, SolveConfig(rel_gap=gap))
        assert res.rel_gap <= gap + 1e-12
        assert res.best_bound <= res.objective_value + 1e-9
        assert res.objective_value <= previous + 1e-9
        previous = res.objective_value


def test_branching_rules_agree():
    for seed in (3, 8, 21):
        m = assemble(*toy_uc_instance(seed))
        a = branch_and_bound(m, SolveConfig(rel_gap=0.0))
        b = branch_and_bound(m, SolveConfig(rel_gap=0.0, branching="pseudo-cost"))
        assert a.objective_value == pytest.approx(b.objective_value, rel=1e-9, abs=1e-9)


def test_deterministic():
    m = assemble(*toy_uc_instance(5))
    a, b = branch_and_bound(m, EXACT), branch_and_bound(m, EXACT)
    assert np.array_equal(a.values, b.values) and a.node_count == b.node_count


@pytest.mark.parametrize("seed", range(40))
def test_branch_and_bound_matches_highs(seed):
    # [DERIVED] HiGHS via scipy as an independent MILP oracle
    m = random_milp(seed)
    c, c0, cons, integ, bounds = scipy_problem(m, "cost")
    ref = milp(c, constraints=cons, integrality=integ, bounds=bounds,
               options={"mip_rel_gap": 0.0})
    res = branch_and_bound(m, EXACT, "cost")
    if ref.status == 2:
        assert res.status == "infeasible"
    elif ref.status == 3 or (ref.status == 4 and ref.x is None):
        assert res.status in ("unbounded", "infeasible")
    elif ref.status == 0:
        assert res.status == "optimal"
        assert res.objective_value == pytest.approx(ref.fun + c0, rel=1e-6, abs=1e-6)
        assert audit_solution(m, res.values).max_residual <= 1e-6


def test_node_limit():
    m = assemble(*toy_uc_instance(11))
    res = branch_and_bound(m, SolveConfig(rel_gap=0.0, node_limit=1))
    assert res.status in ("limit_reached", "optimal")
    assert res.node_count <= 1


def test_size_guard():
    m = assemble(*toy_uc_instance(2))
    with pytest.raises(ModelTooLargeError):
        branch_and_bound(m, SolveConfig(max_nonzeros=3))


def test_audit_examples():
    m = assemble(*toy_uc_instance(4))
    res = branch_and_bound(m, EXACT)
    rep = audit_solution(m, res.assignment)
    assert rep.max_residual <= 1e-6 and rep.clean
    x = res.values.copy()
    j = next(v.index for v in m.variables if math.isfinite(v.upper) and not v.is_binary)
    x[j] = m.variables[j].upper + 1.0
    assert m.variables[j].name in [b[0] for b in audit_solution(m, x).bound_violations]
    x = res.values.copy()
    x[m.binaries[0]] = 0.5
    assert audit_solution(m, x).integrality_violations
    zsys, zscn = zero_demand_instance()
    zm = assemble(zsys, zscn)
    assert audit_solution(zm, np.zeros(zm.n_vars)).max_residual == 0.0
    with pytest.raises(KeyError, match="misses"):
        audit_solution(zm, {})


def test_pwl_consistency_on_curved_toys():
    for seed in range(30):
        sys, scn = toy_uc_instance(seed)
        if any(not c.curve.is_linear for u in sys.units for c in u.conversions):
            m = assemble(sys, scn)
            res = branch_and_bound(m, EXACT)
            assert pwl_consistency(sys, m, res.values) <= 1e-6


@pytest.mark.skipif(kernel.compiled is None, reason="compiled kernel not built")
@pytest.mark.parametrize("seed", range(10))
def test_kernels_agree(seed):
    m = random_milp(seed + 100)
    lp = compile_lp(m, "cost")
    outs = []
    for k in (kernel.pure, kernel.compiled):
        s = DenseSimplex(lp.A, lp.row_lo, lp.row_hi, lp.col_lo, lp.col_hi, lp.c, kernel=k)
        outs.append(s.solve())
    a, b = outs
    assert a.status == b.status and a.iterations == b.iterations
    if a.x is not None:
        assert np.allclose(a.x, b.x, atol=1e-12)


def test_backend_selection_env(monkeypatch):
    import importlib
    monkeypatch.setenv("DHPLAN_PURE_PYTHON", "1")
    mod = importlib.reload(kernel)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("DHPLAN_PURE_PYTHON")
        importlib.reload(kernel)

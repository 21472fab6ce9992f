from dataclasses import replace

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from dhplan.bridge import mps_text
from dhplan.io import bundled_example, load_scenario
from dhplan.milp import assemble
from dhplan.solver import SolveConfig, branch_and_bound
from dhplan.synthetic import generate_synthetic_instance, toy_uc_instance
from dhplan.system import GeneratorUnit, PwlCurve, evaluate_pwl, min_updown_windows
from dhplan.system import validate_system

@st.composite
def curves(draw):
    n = draw(st.integers(2, 6))
    gaps = draw(st.lists(st.floats(0.1, 10), min_size=n - 1, max_size=n - 1))
    x0 = draw(st.floats(0, 5))
    xs = [x0]
    for g in gaps:
        xs.append(xs[-1] + g)
    ys = draw(st.lists(st.integers(-100, 100).map(float), min_size=n, max_size=n))
    return PwlCurve(tuple(zip(xs, ys)))


@given(curves())
def test_pwl_exact_at_breakpoints(curve):
    for x, y in curve.breakpoints:
        assert abs(evaluate_pwl(curve, x) - y) <= 1e-9 * max(1.0, abs(y))


@given(curves(), st.lists(st.floats(0, 1), min_size=2, max_size=20))
def test_pwl_monotone_iff_outputs_monotone(curve, fracs):
    lo, hi = curve.breakpoints[0][0], curve.breakpoints[-1][0]
    xs = sorted([lo + f * (hi - lo) for f in fracs] + [x for x, _ in curve.breakpoints])
    vals = [evaluate_pwl(curve, x) for x in xs]
    ys = [y for _, y in curve.breakpoints]
    out_monotone = all(b >= a for a, b in zip(ys, ys[1:]))
    eval_monotone = all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    if out_monotone:
        assert eval_monotone
    else:
        # the breakpoints themselves are among the sampled points
        assert not eval_monotone


@given(st.integers(0, 30), st.integers(0, 200), st.booleans())
def test_window_contains_t_and_has_size(length, t, up):
    kw = {"min_uptime_steps": length} if up else {"min_downtime_steps": length}
    unit = GeneratorUnit("u", "B", (), **kw)
    window = list(min_updown_windows(unit, t)[0 if up else 1])
    assert t in window
    assert len(window) == min(max(length, 1), t + 1)
    assert window == list(range(t - len(window) + 1, t + 1))


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(0, 4),
       st.integers(1, 12))
def test_generator_always_valid(seed, regions, units, invest, steps):
    sys, scn = generate_synthetic_instance(regions, units, invest, steps, seed)
    assert validate_system(sys, scn) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_assembly_is_pure(seed):
    sys, scn = toy_uc_instance(seed)
    assert mps_text(assemble(sys, scn)) == mps_text(assemble(sys, scn))


def test_all_built_uc_bound():
    # every candidate available for free can only lower the operating cost
    sys, scn = load_scenario(bundled_example())
    exact = SolveConfig(rel_gap=0.0)
    m = assemble(sys, scn)
    res = branch_and_bound(m, exact)
    z = {v.key[1]: res.values[v.index] for v in m.vars_of("inv")}
    chosen = [inv for inv in sys.investments if z[inv.id] > 0.5]
    capex = sum(inv.run_cost(scn.fraction_for(sys.time_grid)) for inv in chosen)
    uc = branch_and_bound(assemble(replace(sys, investments=()), scn), exact)
    assert uc.objective_value <= res.objective_value - capex + 1e-6 * abs(res.objective_value)

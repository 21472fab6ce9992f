"""Translate a system and scenario into the integrated UC + investment MILP.

Each ``build_*`` function appends one constraint family to a
:class:`ModelBuilder` and returns the number of rows it added. ``assemble``
runs them in a fixed order, so names and indices are reproducible.

Variable families (key = ``(family, entity, resource, step)``):

``x_in``/``x_out`` unit flows, ``z`` status, ``s`` start-up, ``sd`` shut-down
(only for units with a downtime window >= 2), ``lam``/``seg`` PWL weights and
segment selectors, ``h``/``ch``/``dis`` storage level and flows, ``p``/``e``
purchases and sales, ``f`` edge flows, ``inv`` investment selectors.
"""
from __future__ import annotations

import math

from ..system import (
    Diagnostic,
    GeneratorUnit,
    MultiEnergySystem,
    Scenario,
    min_updown_windows,
    validate_system,
)
from .model import BINARY, MilpModel, ModelBuilder

INF = math.inf


class ValidationError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "\n".join(f"  {d}" for d in self.diagnostics[:20])
        super().__init__(f"system failed validation:\n{lines}")


def _max_input(unit: GeneratorUnit, resource: str) -> float:
    return max(c.inputs[-1] for conv in unit.conversions if conv.input == resource
               for c in conv.curves())


def _max_output(unit: GeneratorUnit, resource: str) -> float:
    top = max(max(c.outputs) for conv in unit.conversions if conv.output == resource
              for c in conv.curves())
    return min(top, unit.bounds_for(resource)[1])


def uses_shutdown(unit: GeneratorUnit) -> bool:
    return unit.min_downtime_steps >= 2


def build_variables(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    start = len(b.variables)
    T = sys.steps
    for u in sys.units:
        for t in T:
            for r in u.inputs:
                b.add_var("x_in", u.id, r, t, upper=_max_input(u, r))
            for r in u.outputs:
                b.add_var("x_out", u.id, r, t, upper=_max_output(u, r))
            b.add_var("z", u.id, None, t, kind=BINARY)
            b.add_var("s", u.id, None, t, kind=BINARY)
            if uses_shutdown(u):
                b.add_var("sd", u.id, None, t, kind=BINARY)
    for k in sys.storages:
        for t in T:
            b.add_var("h", k.id, None, t, lower=k.level_bounds[0], upper=k.level_bounds[1])
            b.add_var("ch", k.id, None, t, lower=k.charge_bounds[0], upper=k.charge_bounds[1])
            b.add_var("dis", k.id, None, t, lower=k.discharge_bounds[0],
                      upper=k.discharge_bounds[1])
    for m in sys.markets:
        for t in T:
            b.add_var("p", m.id, None, t, lower=m.purchase_bounds[0], upper=m.purchase_bounds[1])
            b.add_var("e", m.id, None, t, lower=m.sale_bounds[0], upper=m.sale_bounds[1])
    for e in sys.edges:
        lo = 0.0 if e.directed else -e.capacity
        for t in T:
            b.add_var("f", e.id, None, t, lower=lo, upper=e.capacity)
    for inv in sys.investments:
        b.add_var("inv", inv.id, kind=BINARY)
    return len(b.variables) - start


def _node_resources(sys: MultiEnergySystem, scn: Scenario) -> dict[str, list[str]]:
    touched: dict[str, set[str]] = {n.id: set() for n in sys.nodes}
    for u in sys.units:
        touched[u.node].update(u.inputs)
        touched[u.node].update(u.outputs)
    for k in sys.storages:
        touched[k.node].add(k.resource)
    for m in sys.markets:
        touched[m.node].add(m.resource)
    for e in sys.edges:
        touched[e.source].add(e.resource)
        touched[e.target].add(e.resource)
    for node, r in scn.demand:
        touched[node].add(r)
    order = [r.id for r in sys.resources]
    return {n: [r for r in order if r in rs] for n, rs in touched.items()}


def build_balance(b: ModelBuilder, sys: MultiEnergySystem, scn: Scenario) -> int:
    """Supply equals demand plus consumption for every (node, resource, step)."""
    added = 0
    for node, resources in _node_resources(sys, scn).items():
        for r in resources:
            demand = scn.demand.get((node, r))
            has_supply = False
            for t in sys.steps:
                terms = []
                for u in sys.units:
                    if u.node != node:
                        continue
                    if r in u.outputs:
                        terms.append((b.idx("x_out", u.id, r, t), 1.0))
                        has_supply = True
                    if r in u.inputs:
                        terms.append((b.idx("x_in", u.id, r, t), -1.0))
                for k in sys.storages:
                    if k.node == node and k.resource == r:
                        terms.append((b.idx("dis", k.id, None, t), 1.0))
                        terms.append((b.idx("ch", k.id, None, t), -1.0))
                        has_supply = True
                for m in sys.markets:
                    if m.node == node and m.resource == r:
                        terms.append((b.idx("p", m.id, None, t), 1.0))
                        terms.append((b.idx("e", m.id, None, t), -1.0))
                        has_supply = True
                for e in sys.edges:
                    if e.resource != r:
                        continue
                    if e.target == node:
                        terms.append((b.idx("f", e.id, None, t), 1.0))
                        has_supply = True
                    if e.source == node:
                        terms.append((b.idx("f", e.id, None, t), -1.0))
                        has_supply = has_supply or not e.directed
                d = demand[t] if demand is not None else 0.0
                row = b.add_row("balance", f"bal[{node},{r},{t}]", terms, "=", d)
                added += 1
                if not row.terms:
                    b.diagnostics.append(
                        Diagnostic(row.name, "degenerate row", f"0 = {d}")
                    )
            if demand is not None and any(v > 0 for v in demand) and not has_supply:
                b.diagnostics.append(Diagnostic(f"{node}/{r}", "demand without supply path"))
    return added


def build_conversion(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    """Characteristic curves: one equality for 2-point curves, lambda/segment encoding otherwise."""
    added = 0
    for u in sys.units:
        for j, conv in enumerate(u.conversions):
            tag = f"{u.id}#{j}"
            for t in sys.steps:
                curve = conv.curve_at(t)
                xin = b.idx("x_in", u.id, conv.input, t)
                xout = b.idx("x_out", u.id, conv.output, t)
                z = b.idx("z", u.id, None, t)
                if curve.is_linear:
                    (x0, y0), (x1, y1) = curve.breakpoints
                    slope = (y1 - y0) / (x1 - x0)
                    icpt = y0 - slope * x0
                    b.add_row("conversion", f"conv[{tag},{t}]",
                              [(xout, 1.0), (xin, -slope), (z, -icpt)], "=", 0.0)
                    added += 1
                    continue
                nb = len(curve.breakpoints)
                lam = [b.add_var("lam", tag, q, t, upper=1.0) for q in range(nb)]
                seg = [b.add_var("seg", tag, q, t, kind=BINARY) for q in range(nb - 1)]
                b.add_row("conversion", f"lam_sum[{tag},{t}]",
                          [(v, 1.0) for v in lam] + [(z, -1.0)], "=", 0.0)
                b.add_row("conversion", f"seg_sum[{tag},{t}]",
                          [(v, 1.0) for v in seg] + [(z, -1.0)], "=", 0.0)
                for q in range(nb):
                    near = [s for s in (q - 1, q) if 0 <= s < nb - 1]
                    b.add_row("conversion", f"adj[{tag},{q},{t}]",
                              [(lam[q], 1.0)] + [(seg[s], -1.0) for s in near], "<=", 0.0)
                b.add_row("conversion", f"link_in[{tag},{t}]",
                          [(xin, 1.0)] + [(lam[q], -bx) for q, bx in enumerate(curve.inputs)],
                          "=", 0.0)
                b.add_row("conversion", f"link_out[{tag},{t}]",
                          [(xout, 1.0)] + [(lam[q], -by) for q, by in enumerate(curve.outputs)],
                          "=", 0.0)
                added += nb + 4
    return added


def build_commitment_logic(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    """Start-up / shut-down indicators and status-to-output coupling."""
    added = 0
    for u in sys.units:
        for t in sys.steps:
            z = b.idx("z", u.id, None, t)
            s = b.idx("s", u.id, None, t)
            prev = b.idx("z", u.id, None, t - 1) if t > 0 else None
            if prev is None:
                b.add_row("commitment", f"su_lo[{u.id},{t}]", [(s, 1.0), (z, -1.0)], ">=", 0.0)
                b.add_row("commitment", f"su_on[{u.id},{t}]", [(s, 1.0), (z, -1.0)], "<=", 0.0)
                added += 2
            else:
                b.add_row("commitment", f"su_lo[{u.id},{t}]",
                          [(s, 1.0), (z, -1.0), (prev, 1.0)], ">=", 0.0)
                b.add_row("commitment", f"su_on[{u.id},{t}]", [(s, 1.0), (z, -1.0)], "<=", 0.0)
                b.add_row("commitment", f"su_off[{u.id},{t}]", [(s, 1.0), (prev, 1.0)], "<=", 1.0)
                added += 3
            if uses_shutdown(u):
                sd = b.idx("sd", u.id, None, t)
                if prev is None:
                    b.add_row("commitment", f"sd_on[{u.id},{t}]", [(sd, 1.0)], "<=", 0.0)
                    b.add_row("commitment", f"sd_off[{u.id},{t}]", [(sd, 1.0), (z, 1.0)], "<=", 1.0)
                    added += 2
                else:
                    b.add_row("commitment", f"sd_lo[{u.id},{t}]",
                              [(sd, 1.0), (prev, -1.0), (z, 1.0)], ">=", 0.0)
                    b.add_row("commitment", f"sd_on[{u.id},{t}]", [(sd, 1.0), (prev, -1.0)],
                              "<=", 0.0)
                    b.add_row("commitment", f"sd_off[{u.id},{t}]", [(sd, 1.0), (z, 1.0)], "<=", 1.0)
                    added += 3
            for r in u.outputs:
                x = b.idx("x_out", u.id, r, t)
                lo = u.bounds_for(r)[0]
                b.add_row("commitment", f"cap_hi[{u.id},{r},{t}]",
                          [(x, 1.0), (z, -_max_output(u, r))], "<=", 0.0)
                added += 1
                if lo > 0:
                    b.add_row("commitment", f"cap_lo[{u.id},{r},{t}]",
                              [(x, 1.0), (z, -lo)], ">=", 0.0)
                    added += 1
            # domain rows only where no lambda encoding already pins x_in to z
            for r in u.inputs:
                linear = [c.curve_at(t) for c in u.conversions
                          if c.input == r and c.curve_at(t).is_linear]
                if not linear:
                    continue
                x = b.idx("x_in", u.id, r, t)
                hi = min(c.inputs[-1] for c in linear)
                lo = max(c.inputs[0] for c in linear)
                b.add_row("commitment", f"in_hi[{u.id},{r},{t}]", [(x, 1.0), (z, -hi)], "<=", 0.0)
                added += 1
                if lo > 0:
                    b.add_row("commitment", f"in_lo[{u.id},{r},{t}]",
                              [(x, 1.0), (z, -lo)], ">=", 0.0)
                    added += 1
    return added


def build_min_updown(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    added = 0
    for u in sys.units:
        for t in sys.steps:
            up, down = min_updown_windows(u, t)
            z = b.idx("z", u.id, None, t)
            if u.min_uptime_steps >= 2:
                b.add_row("min_updown", f"min_up[{u.id},{t}]",
                          [(b.idx("s", u.id, None, tau), 1.0) for tau in up] + [(z, -1.0)],
                          "<=", 0.0)
                added += 1
            if uses_shutdown(u):
                b.add_row("min_updown", f"min_down[{u.id},{t}]",
                          [(b.idx("sd", u.id, None, tau), 1.0) for tau in down] + [(z, 1.0)],
                          "<=", 1.0)
                added += 1
    return added


def build_ramping(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    added = 0
    for u in sys.units:
        for r in u.outputs:
            for t in list(sys.steps)[:-1]:
                now = b.idx("x_out", u.id, r, t)
                nxt = b.idx("x_out", u.id, r, t + 1)
                if math.isfinite(u.ramp_up):
                    b.add_row("ramping", f"ramp_up[{u.id},{r},{t}]",
                              [(nxt, 1.0), (now, -1.0)], "<=", u.ramp_up)
                    added += 1
                if math.isfinite(u.ramp_down):
                    b.add_row("ramping", f"ramp_dn[{u.id},{r},{t}]",
                              [(now, 1.0), (nxt, -1.0)], "<=", u.ramp_down)
                    added += 1
    return added


def build_storage(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    """Level recursion anchored on the initial level at the first step."""
    added = 0
    for k in sys.storages:
        for t in sys.steps:
            h = b.idx("h", k.id, None, t)
            flows = [(b.idx("ch", k.id, None, t), -k.load_eff),
                     (b.idx("dis", k.id, None, t), k.unload_eff)]
            if t == 0:
                b.add_row("storage", f"level[{k.id},{t}]", [(h, 1.0)] + flows,
                          "=", k.initial_level)
            else:
                prev = b.idx("h", k.id, None, t - 1)
                b.add_row("storage", f"level[{k.id},{t}]",
                          [(h, 1.0), (prev, -k.loss_at(t))] + flows, "=", 0.0)
            added += 1
        if k.cyclic:
            last = b.idx("h", k.id, None, sys.time_grid.step_count - 1)
            b.add_row("storage", f"cyclic[{k.id}]", [(last, 1.0)], "=", k.initial_level)
            added += 1
    return added


def build_investment_linking(b: ModelBuilder, sys: MultiEnergySystem) -> int:
    added = 0
    units = {u.id for u in sys.units}
    stores = {k.id: k for k in sys.storages}
    for inv in sys.investments:
        y = b.idx("inv", inv.id)
        for ent in inv.enabled_entities:
            for t in sys.steps:
                if ent in units:
                    b.add_row("investment", f"link[{ent},{t}]",
                              [(b.idx("z", ent, None, t), 1.0), (y, -1.0)], "<=", 0.0)
                    added += 1
                elif ent in stores:
                    k = stores[ent]
                    caps = (("h", k.level_bounds[1]), ("ch", k.charge_bounds[1]),
                            ("dis", k.discharge_bounds[1]))
                    for fam, cap in caps:
                        b.add_row("investment", f"link_{fam}[{ent},{t}]",
                                  [(b.idx(fam, ent, None, t), 1.0), (y, -cap)], "<=", 0.0)
                        added += 1
    return added


def build_objectives(b: ModelBuilder, sys: MultiEnergySystem, scn: Scenario) -> None:
    frac = scn.fraction_for(sys.time_grid)
    cost: list[tuple[int, float]] = []
    co2: list[tuple[int, float]] = []
    for inv in sys.investments:
        cost.append((b.idx("inv", inv.id), inv.run_cost(frac)))
    for t in sys.steps:
        for u in sys.units:
            cost.append((b.idx("z", u.id, None, t), u.fixed_running_cost))
            cost.append((b.idx("s", u.id, None, t), u.startup_cost))
            for r in u.inputs:
                x = b.idx("x_in", u.id, r, t)
                cost.append((x, u.variable_cost.get(r, 0.0)))
                co2.append((x, u.emission_factor.get(r, 0.0)))
        for m in sys.markets:
            p = b.idx("p", m.id, None, t)
            cost.append((p, scn.purchase_price[m.id][t]))
            co2.append((p, m.purchase_emission_factor))
            sale = scn.sale_price.get(m.id)
            if sale is not None:
                cost.append((b.idx("e", m.id, None, t), -sale[t]))
    b.set_objective("cost", cost)
    b.set_objective("emissions", co2)


def assemble(sys: MultiEnergySystem, scn: Scenario) -> MilpModel:
    """Build the full model; raises :class:`ValidationError` on invalid input."""
    diags = validate_system(sys, scn)
    if diags:
        raise ValidationError(diags)
    b = ModelBuilder(sys.name)
    build_variables(b, sys)
    build_balance(b, sys, scn)
    build_conversion(b, sys)
    build_commitment_logic(b, sys)
    build_min_updown(b, sys)
    build_ramping(b, sys)
    build_storage(b, sys)
    build_investment_linking(b, sys)
    build_objectives(b, sys, scn)
    return b.freeze()

"""Synthetic instances.

``generate_synthetic_instance`` mimics the abstract structure of a large
urban district heating grid: regional balance nodes feeding demand nodes,
shared fuel and power hubs, CHP units with two outputs, heat-only stations,
bidirectional heat links between neighbouring regions and a pool of
candidate investments. All numbers are synthetic.

``toy_uc_instance`` draws tiny single-node systems whose binary count stays
below an enumeration budget, for oracle tests.
"""
from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .system import (
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

HEATING_STATION_SHARE = 0.43

FUEL_PRICE = {"gas": 30.0, "coal": 12.0, "biomass": 38.0}
FUEL_CO2 = {"gas": 0.20, "coal": 0.34, "biomass": 0.0}
POWER_CO2 = 0.40
INVEST_KINDS = ("chp", "gas_turbine", "heat_pump", "biomass_station", "storage",
                "electric_heater", "heating_station")


def _r(v: float, nd: int = 3) -> float:
    return float(round(float(v), nd))


def _chp_curves(fuel_max: float, concave: bool) -> tuple[PwlCurve, PwlCurve]:
    if concave:
        heat = PwlCurve(((0.0, 0.0), (_r(fuel_max / 2), _r(fuel_max / 2 * 0.47)),
                         (_r(fuel_max), _r(fuel_max * 0.45))), "chp_heat")
    else:
        heat = PwlCurve(((0.0, 0.0), (_r(fuel_max), _r(fuel_max * 0.45))), "chp_heat")
    power = PwlCurve(((0.0, 0.0), (_r(fuel_max), _r(fuel_max * 0.38))), "chp_power")
    return heat, power


def _chp(uid, node, heat_cap, fuel, concave, rng, label="CHP", steps=24):
    fuel_max = heat_cap / 0.45
    heat, power = _chp_curves(fuel_max, concave)
    ramp = _r(0.5 * heat_cap)
    return GeneratorUnit(
        id=uid, node=node,
        conversions=(Conversion(fuel, "heat", heat), Conversion(fuel, "power", power)),
        min_uptime_steps=min(3, steps - 1), min_downtime_steps=min(2, steps - 1),
        ramp_up=ramp, ramp_down=ramp,
        output_bounds={"heat": (_r(0.3 * heat_cap), _r(heat_cap))},
        fixed_running_cost=_r(2.0 * heat_cap * rng.uniform(0.8, 1.2)),
        startup_cost=_r(15.0 * heat_cap * rng.uniform(0.8, 1.2)),
        variable_cost={fuel: _r(rng.uniform(1.0, 3.0))},
        label=label,
    )


def _station(uid, node, heat_cap, fuel, eff, rng, label="Heating station"):
    curve = PwlCurve(((0.0, 0.0), (_r(heat_cap / eff), _r(heat_cap))), label)
    return GeneratorUnit(
        id=uid, node=node, conversions=(Conversion(fuel, "heat", curve),),
        fixed_running_cost=_r(0.5 * heat_cap * rng.uniform(0.8, 1.2)),
        startup_cost=_r(1.0 * heat_cap),
        variable_cost={fuel: _r(rng.uniform(0.5, 1.5))},
        label=label,
    )


def _load_profile(steps: int, rng, phase: float) -> np.ndarray:
    t = np.arange(steps)
    daily = np.sin(2 * math.pi * (t % 24) / 24 - math.pi / 2 + phase)
    return np.clip(0.72 + 0.18 * daily + rng.normal(0, 0.03, steps), 0.3, 1.0)


def generate_synthetic_instance(regions: int, units_per_region: int, invest_count: int,
                                steps: int, seed: int) -> tuple[MultiEnergySystem, Scenario]:
    """Deterministic multi-region system for the given counts and ``seed``."""
    if min(regions, units_per_region, steps) < 1 or invest_count < 0:
        raise ValueError("regions, units_per_region and steps must be >= 1; invest_count >= 0")
    rng = np.random.default_rng(seed)
    n_units = regions * units_per_region
    n_hs = 0 if n_units == 1 else max(1, int(round(HEATING_STATION_SHARE * n_units)))
    kinds = ["hs"] * n_hs + ["chp"] * (n_units - n_hs)
    kinds = [kinds[i] for i in rng.permutation(n_units)]
    raw = rng.uniform(40.0, 120.0, n_units)
    hs_raw = raw[[k == "hs" for k in kinds]].sum()
    chp_raw = raw[[k == "chp" for k in kinds]].sum()
    if n_hs and n_hs < n_units:
        total = raw.sum()
        scale = {"hs": HEATING_STATION_SHARE * total / hs_raw,
                 "chp": (1 - HEATING_STATION_SHARE) * total / chp_raw}
        caps = [_r(c * scale[k], 2) for c, k in zip(raw, kinds)]
    else:
        caps = [_r(c, 2) for c in raw]

    units: list[GeneratorUnit] = []
    used_fuels: dict[str, set[str]] = {f"B{r}": set() for r in range(regions)}
    power_nodes: set[str] = set()
    for q, (kind, cap) in enumerate(zip(kinds, caps)):
        node = f"B{q // units_per_region}"
        if kind == "chp":
            fuel = "coal" if rng.random() < 0.25 else "gas"
            units.append(_chp(f"chp{q}", node, cap, fuel, bool(rng.random() < 0.5), rng,
                              f"CHP {fuel}", steps))
            power_nodes.add(node)
        else:
            fuel = "gas"
            units.append(_station(f"hs{q}", node, cap, fuel, 0.9, rng, "Heating station gas"))
        used_fuels[node].add(fuel)

    storages: list[StorageUnit] = []
    investments: list[InvestmentOption] = []
    mean_cap = float(np.mean(caps))
    storages.append(StorageUnit("st0", "B0", "heat", loss_factor=0.99, load_eff=0.95,
                                unload_eff=0.95, level_bounds=(0.0, _r(3 * mean_cap)),
                                charge_bounds=(0.0, _r(mean_cap)),
                                discharge_bounds=(0.0, _r(mean_cap))))
    for q in range(invest_count):
        kind = INVEST_KINDS[(q + int(rng.integers(0, len(INVEST_KINDS)))) % len(INVEST_KINDS)]
        node = f"B{int(rng.integers(0, regions))}"
        cap = _r(rng.uniform(20.0, 80.0), 2)
        eid = f"cand{q}"
        capex_per_mw = {"chp": 1.1e6, "gas_turbine": 0.6e6, "heat_pump": 1.4e6,
                        "biomass_station": 0.9e6, "storage": 0.05e6,
                        "electric_heater": 0.15e6, "heating_station": 0.25e6}[kind]
        if kind == "chp":
            units.append(_chp(eid, node, cap, "gas", bool(rng.random() < 0.5), rng, "CHP gas",
                              steps))
            used_fuels[node].add("gas")
            power_nodes.add(node)
        elif kind == "gas_turbine":
            fuel_max = cap / 0.4
            curve_p = PwlCurve(((0.0, 0.0), (_r(fuel_max), _r(fuel_max * 0.35))), "gt_power")
            curve_h = PwlCurve(((0.0, 0.0), (_r(fuel_max), _r(fuel_max * 0.40))), "gt_heat")
            units.append(GeneratorUnit(
                eid, node, (Conversion("gas", "heat", curve_h), Conversion("gas", "power", curve_p)),
                min_uptime_steps=min(2, steps - 1), startup_cost=_r(5 * cap), fixed_running_cost=_r(1.0 * cap),
                variable_cost={"gas": 1.0}, label="Gas turbine"))
            used_fuels[node].add("gas")
            power_nodes.add(node)
        elif kind in ("heat_pump", "electric_heater"):
            cop = 3.0 if kind == "heat_pump" else 0.99
            curve = PwlCurve(((0.0, 0.0), (_r(cap / cop), _r(cap))), kind)
            label = "Heat pump" if kind == "heat_pump" else "Electrical heater"
            units.append(GeneratorUnit(eid, node, (Conversion("power", "heat", curve),),
                                       fixed_running_cost=_r(0.2 * cap), label=label,
                                       variable_cost={"power": 0.5}))
            power_nodes.add(node)
        elif kind == "biomass_station":
            units.append(_station(eid, node, cap, "biomass", 0.85, rng,
                                  "Heating station biomass"))
            used_fuels[node].add("biomass")
        elif kind == "heating_station":
            units.append(_station(eid, node, cap, "gas", 0.92, rng, "Heating station gas"))
            used_fuels[node].add("gas")
        else:
            storages.append(StorageUnit(eid, node, "heat", loss_factor=0.995, load_eff=0.97,
                                        unload_eff=0.97, level_bounds=(0.0, _r(4 * cap)),
                                        charge_bounds=(0.0, cap), discharge_bounds=(0.0, cap)))
        investments.append(InvestmentOption(
            f"inv{q}", (eid,), _r(capex_per_mw * cap, 0),
            annual_fixed_cost=_r(0.01 * capex_per_mw * cap, 0), label=label_for(kind)))

    fuels = sorted({f for fs in used_fuels.values() for f in fs})
    resources = [Resource("heat", "heat"), Resource("power", "power")]
    resources += [Resource(f, "fuel") for f in fuels]
    nodes = [Node("fuel", "market"), Node("grid", "market")]
    edges: list[Edge] = []
    for r in range(regions):
        nodes += [Node(f"B{r}", "balance"), Node(f"D{r}", "demand")]
        edges.append(Edge(f"heat_B{r}_D{r}", f"B{r}", f"D{r}", "heat"))
        for f in sorted(used_fuels[f"B{r}"]):
            edges.append(Edge(f"{f}_to_B{r}", "fuel", f"B{r}", f))
        if f"B{r}" in power_nodes:
            edges.append(Edge(f"power_B{r}", f"B{r}", "grid", "power", directed=False))
    for r in range(regions - 1):
        edges.append(Edge(f"link_D{r}_D{r + 1}", f"D{r}", f"D{r + 1}", "heat",
                          capacity=_r(0.25 * mean_cap), directed=False))

    markets = [Market(f"buy_{f}", f, "fuel", purchase_emission_factor=FUEL_CO2[f])
               for f in fuels]
    markets.append(Market("power_market", "power", "grid", sale_bounds=(0.0, math.inf),
                          purchase_emission_factor=POWER_CO2))

    # existing heat capacity per region drives the regional demand level
    region_cap = np.zeros(regions)
    for u, kind, cap in zip(units, kinds, caps):
        region_cap[int(u.node[1:])] += cap
    demand = {}
    for r in range(regions):
        prof = _load_profile(steps, rng, phase=0.3 * r)
        demand[(f"D{r}", "heat")] = tuple(_r(v) for v in 0.6 * region_cap[r] * prof)
    t = np.arange(steps)
    power_price = 45.0 + 20.0 * np.sin(2 * math.pi * (t % 24) / 24 - math.pi / 2)
    power_price = power_price + rng.normal(0.0, 3.0, steps)
    prices = {f"buy_{f}": tuple(_r(FUEL_PRICE[f] * (1 + 0.02 * rng.normal())) for _ in t)
              for f in fuels}
    prices["power_market"] = tuple(_r(v) for v in power_price)
    sale = {"power_market": tuple(_r(0.85 * v) for v in power_price)}

    sys = MultiEnergySystem(resources, nodes, edges, units, storages, markets, investments,
                            TimeGrid(steps, 1.0, "synthetic"), name=f"synthetic_s{seed}")
    return sys, Scenario(demand, prices, sale)


def label_for(kind: str) -> str:
    return {"chp": "CHP", "gas_turbine": "Gas turbine", "heat_pump": "Heat pump",
            "biomass_station": "Heating station (biomass)", "storage": "Heat storage",
            "electric_heater": "Electrical heater",
            "heating_station": "Heating station"}[kind]


def heating_station_share(sys: MultiEnergySystem, include_candidates: bool = False) -> float:
    """Share of heat capacity held by heat-only units (one conversion)."""
    cands = sys.candidate_of()
    hs = chp = 0.0
    for u in sys.units:
        if u.id in cands and not include_candidates:
            continue
        if "heat" not in u.outputs:
            continue
        cap = u.bounds_for("heat")[1]
        if not math.isfinite(cap):
            cap = max(c.curve.outputs[-1] for c in u.conversions if c.output == "heat")
        if len(u.outputs) == 1:
            hs += cap
        else:
            chp += cap
    return hs / (hs + chp) if hs + chp else 0.0


def _binaries_per_step(units) -> int:
    n = 0
    for u in units:
        n += 2 + (1 if u.min_downtime_steps >= 2 else 0)
        n += sum(len(c.curve.breakpoints) - 1 for c in u.conversions if not c.curve.is_linear)
    return n


def toy_uc_instance(seed: int, max_binaries: int = 12, max_steps: int = 12
                    ) -> tuple[MultiEnergySystem, Scenario]:
    """Single-node heat system with 1-2 units, sized so binaries <= ``max_binaries``."""
    rng = np.random.default_rng(seed)
    with_invest = bool(rng.random() < 0.5)
    n_units = int(rng.integers(1, 3))
    units = []
    for q in range(n_units):
        cap = _r(rng.uniform(5, 15), 2)
        pwl = bool(rng.random() < 0.35)
        if pwl:
            fx = cap / 0.8
            curve = PwlCurve(((0.0, 0.0), (_r(fx / 2), _r(cap * 0.55)), (_r(fx), cap)))
        else:
            curve = PwlCurve(((0.0, 0.0), (_r(cap / rng.uniform(0.7, 0.95)), cap)))
        ramp = math.inf if rng.random() < 0.5 else _r(rng.uniform(0.4, 1.0) * cap)
        units.append(GeneratorUnit(
            f"u{q}", "B", (Conversion("gas", "heat", curve),),
            min_uptime_steps=int(rng.integers(0, 3)),
            min_downtime_steps=int(rng.integers(0, 3)),
            ramp_up=ramp, ramp_down=ramp,
            output_bounds={"heat": (_r(rng.uniform(0, 0.4) * cap), cap)},
            fixed_running_cost=_r(rng.uniform(0, 20)),
            startup_cost=_r(rng.uniform(0, 60)),
            variable_cost={"gas": _r(rng.uniform(0, 3))},
            emission_factor={"gas": _r(rng.uniform(0.1, 0.3))},
        ))
    per_step = _binaries_per_step(units)
    budget = max_binaries - int(with_invest)
    t_max = max(1, min(max_steps, budget // per_step))
    steps = int(rng.integers(1, t_max + 1))
    if per_step * steps + int(with_invest) > max_binaries:
        with_invest = False
    units = [
        replace(u, min_uptime_steps=min(u.min_uptime_steps, steps - 1),
                min_downtime_steps=min(u.min_downtime_steps, steps - 1))
        for u in units
    ]
    storages = []
    if rng.random() < 0.4:
        storages.append(StorageUnit("st", "B", "heat", loss_factor=_r(rng.uniform(0.9, 1.0)),
                                    load_eff=0.95, unload_eff=0.95, level_bounds=(0.0, 10.0),
                                    charge_bounds=(0.0, 5.0), discharge_bounds=(0.0, 5.0)))
    investments = []
    if with_invest:
        investments.append(InvestmentOption("inv0", (units[-1].id,),
                                            _r(rng.uniform(0, 2000)), depreciation_years=25))
    markets = [Market("gas_m", "gas", "B", purchase_emission_factor=_r(rng.uniform(0, 0.2))),
               Market("heat_m", "heat", "B", purchase_bounds=(0.0, 40.0))]
    sys = MultiEnergySystem(
        [Resource("heat", "heat"), Resource("gas", "fuel")],
        [Node("B", "demand")], [], units, storages, markets, investments,
        TimeGrid(steps, 1.0), name=f"toy{seed}",
    )
    demand = {("B", "heat"): tuple(_r(rng.uniform(3, 20)) for _ in range(steps))}
    prices = {"gas_m": tuple(_r(rng.uniform(20, 35)) for _ in range(steps)),
              "heat_m": tuple(_r(rng.uniform(60, 120)) for _ in range(steps))}
    return sys, Scenario(demand, prices, horizon_fraction=1.0)

"""Scenario files: one JSON document plus ``t,value`` CSV time series.

Relative series paths resolve against the directory of the scenario file.
Unbounded values are written as ``null``.
"""
from __future__ import annotations

import csv
import json
import math
import os
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from ..system import (
    Conversion,
    Diagnostic,
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
    validate_system,
)


class ScenarioError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


@lru_cache(maxsize=1)
def scenario_schema() -> dict:
    text = resources.files("dhplan").joinpath("schema/scenario.schema.json").read_text("utf-8")
    return json.loads(text)


def bundled_example() -> Path:
    """Path of the small scenario shipped with the package."""
    return Path(str(resources.files("dhplan").joinpath("examples/example.json")))


def _pointer(path) -> str:
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else "/"


def schema_errors(doc) -> list[str]:
    validator = jsonschema.Draft202012Validator(scenario_schema())
    errs = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    return [f"{_pointer(e.absolute_path)}: {e.message}" for e in errs]


def load_timeseries_csv(path, expected_len: int) -> tuple[float, ...]:
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError([f"{path}: series file not found"]) from None
    values: dict[int, float] = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "value"]:
            raise ScenarioError([f"{path}:1: header must be 't,value'"])
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ScenarioError([f"{path}:{line}: expected 2 fields, got {len(row)}"])
            try:
                t = int(row[0])
            except ValueError:
                raise ScenarioError([f"{path}:{line}: step {row[0]!r} is not an integer"]) from None
            try:
                v = float(row[1])
            except ValueError:
                raise ScenarioError([f"{path}:{line}: value {row[1]!r} is not a number"]) from None
            if not math.isfinite(v):
                raise ScenarioError([f"{path}:{line}: value {row[1]!r} is not finite"])
            if t in values:
                raise ScenarioError([f"{path}:{line}: duplicate step {t}"])
            if not 0 <= t < expected_len:
                raise ScenarioError([f"{path}:{line}: step {t} outside 0..{expected_len - 1}"])
            values[t] = v
    missing = [t for t in range(expected_len) if t not in values]
    if missing:
        raise ScenarioError([f"{path}: length mismatch, {len(values)} steps for a "
                             f"{expected_len}-step grid (missing {missing[:10]})"])
    return tuple(values[t] for t in range(expected_len))


def write_timeseries_csv(path, values) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in enumerate(values):
            w.writerow([t, repr(float(v))])


def _hi(v) -> float:
    return math.inf if v is None else float(v)


def _lo(v) -> float:
    return -math.inf if v is None else float(v)


def _iv(pair, default):
    if pair is None:
        return default
    return (_lo(pair[0]), _hi(pair[1]))


def _curve(points, name="") -> PwlCurve:
    return PwlCurve(tuple((a, b) for a, b in points), name)


def _unit(d) -> GeneratorUnit:
    convs = []
    for c in d["conversions"]:
        table = c.get("curve_table")
        name = c.get("name", "")
        convs.append(Conversion(
            c["input"], c["output"], _curve(c["breakpoints"], name),
            tuple(_curve(p, name) for p in table) if table is not None else None,
        ))
    return GeneratorUnit(
        id=d["id"],
        node=d["node"],
        conversions=tuple(convs),
        min_uptime_steps=d.get("min_uptime_steps", 0),
        min_downtime_steps=d.get("min_downtime_steps", 0),
        ramp_up=_hi(d.get("ramp_up")),
        ramp_down=_hi(d.get("ramp_down")),
        output_bounds={r: _iv(b, (0.0, math.inf)) for r, b in d.get("output_bounds", {}).items()},
        fixed_running_cost=d.get("fixed_running_cost", 0.0),
        startup_cost=d.get("startup_cost", 0.0),
        variable_cost=dict(d.get("variable_cost", {})),
        emission_factor=dict(d.get("emission_factor", {})),
        label=d.get("label", ""),
    )


def _storage(d) -> StorageUnit:
    loss = d.get("loss_factor", 1.0)
    return StorageUnit(
        id=d["id"], node=d["node"], resource=d["resource"],
        loss_factor=tuple(loss) if isinstance(loss, list) else float(loss),
        load_eff=d.get("load_eff", 1.0),
        unload_eff=d.get("unload_eff", 1.0),
        level_bounds=_iv(d.get("level_bounds"), (0.0, math.inf)),
        charge_bounds=_iv(d.get("charge_bounds"), (0.0, math.inf)),
        discharge_bounds=_iv(d.get("discharge_bounds"), (0.0, math.inf)),
        initial_level=d.get("initial_level", 0.0),
        cyclic=d.get("cyclic", False),
    )


def parse_scenario(doc: dict, base_dir) -> tuple[MultiEnergySystem, Scenario]:
    """Build the domain objects from an already schema-checked document."""
    base = Path(base_dir)
    grid = TimeGrid(**doc["time_grid"])
    system = MultiEnergySystem(
        resources=tuple(Resource(r["id"], r.get("kind", "heat")) for r in doc["resources"]),
        nodes=tuple(Node(n["id"], n.get("kind", "balance")) for n in doc["nodes"]),
        edges=tuple(Edge(e["id"], e["source"], e["target"], e["resource"],
                         _hi(e.get("capacity")), e.get("directed", True)) for e in doc["edges"]),
        units=tuple(_unit(u) for u in doc["units"]),
        storages=tuple(_storage(s) for s in doc["storages"]),
        markets=tuple(Market(m["id"], m["resource"], m["node"],
                             _iv(m.get("purchase_bounds"), (0.0, math.inf)),
                             _iv(m.get("sale_bounds"), (0.0, 0.0)),
                             m.get("purchase_emission_factor", 0.0)) for m in doc["markets"]),
        investments=tuple(InvestmentOption(i["id"], tuple(i["enabled_entities"]), i["capex"],
                                           i.get("depreciation_years", 25),
                                           i.get("annual_fixed_cost", 0.0), i.get("label", ""))
                          for i in doc["investments"]),
        time_grid=grid,
        name=doc.get("name", "system"),
    )
    refs = doc["series_refs"]
    problems: list[str] = []
    n = grid.step_count

    def load(rel):
        try:
            return load_timeseries_csv(base / rel, n)
        except ScenarioError as exc:
            problems.extend(exc.problems)
            return None

    demand, buy, sell = {}, {}, {}
    for i, ref in enumerate(refs["demand"]):
        key = (ref["node"], ref["resource"])
        if key in demand:
            problems.append(f"/series_refs/demand/{i}: duplicate demand for {key}")
        demand[key] = load(ref["path"])
    for section, target in (("purchase_price", buy), ("sale_price", sell)):
        for i, ref in enumerate(refs.get(section, [])):
            if ref["market"] in target:
                problems.append(f"/series_refs/{section}/{i}: duplicate market {ref['market']}")
            target[ref["market"]] = load(ref["path"])
    if problems:
        raise ScenarioError(problems)
    scenario = Scenario(demand, buy, sell, doc.get("horizon_fraction"),
                        doc.get("currency", "EUR"), doc.get("emission_unit", "tCO2"))
    return system, scenario


def read_scenario(path) -> tuple[MultiEnergySystem, Scenario, list[Diagnostic]]:
    """Parse without raising on semantic diagnostics (schema and file errors still raise)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioError([f"{path}: scenario file not found"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"]) from None
    errs = schema_errors(doc)
    if errs:
        raise ScenarioError(errs)
    system, scenario = parse_scenario(doc, path.parent)
    return system, scenario, validate_system(system, scenario)


def load_scenario(path) -> tuple[MultiEnergySystem, Scenario]:
    system, scenario, diags = read_scenario(path)
    if diags:
        raise ScenarioError([str(d) for d in diags])
    return system, scenario


def _num(v):
    if isinstance(v, float) and math.isinf(v):
        return None
    return v


def _bounds(pair):
    return [_num(pair[0]), _num(pair[1])]


def scenario_document(system: MultiEnergySystem, scenario: Scenario,
                      series_paths: dict[str, str]) -> dict:
    grid = system.time_grid

    def conv(c: Conversion):
        d = {"input": c.input, "output": c.output,
             "breakpoints": [list(p) for p in c.curve.breakpoints]}
        if c.curve.name:
            d["name"] = c.curve.name
        if c.curve_table is not None:
            d["curve_table"] = [[list(p) for p in cv.breakpoints] for cv in c.curve_table]
        return d

    return {
        "name": system.name,
        "currency": scenario.currency,
        "emission_unit": scenario.emission_unit,
        "horizon_fraction": scenario.horizon_fraction,
        "time_grid": {"step_count": grid.step_count, "step_hours": grid.step_hours,
                      "start_label": grid.start_label},
        "resources": [{"id": r.id, "kind": r.kind} for r in system.resources],
        "nodes": [{"id": n.id, "kind": n.kind} for n in system.nodes],
        "edges": [{"id": e.id, "source": e.source, "target": e.target, "resource": e.resource,
                   "capacity": _num(e.capacity), "directed": e.directed} for e in system.edges],
        "units": [{
            "id": u.id, "node": u.node, "label": u.label,
            "conversions": [conv(c) for c in u.conversions],
            "min_uptime_steps": u.min_uptime_steps, "min_downtime_steps": u.min_downtime_steps,
            "ramp_up": _num(u.ramp_up), "ramp_down": _num(u.ramp_down),
            "output_bounds": {r: _bounds(b) for r, b in u.output_bounds.items()},
            "fixed_running_cost": u.fixed_running_cost, "startup_cost": u.startup_cost,
            "variable_cost": dict(u.variable_cost), "emission_factor": dict(u.emission_factor),
        } for u in system.units],
        "storages": [{
            "id": k.id, "node": k.node, "resource": k.resource,
            "loss_factor": list(k.loss_factor) if isinstance(k.loss_factor, tuple)
            else k.loss_factor,
            "load_eff": k.load_eff, "unload_eff": k.unload_eff,
            "level_bounds": _bounds(k.level_bounds), "charge_bounds": _bounds(k.charge_bounds),
            "discharge_bounds": _bounds(k.discharge_bounds),
            "initial_level": k.initial_level, "cyclic": k.cyclic,
        } for k in system.storages],
        "markets": [{
            "id": m.id, "resource": m.resource, "node": m.node,
            "purchase_bounds": _bounds(m.purchase_bounds), "sale_bounds": _bounds(m.sale_bounds),
            "purchase_emission_factor": m.purchase_emission_factor,
        } for m in system.markets],
        "investments": [{
            "id": i.id, "enabled_entities": list(i.enabled_entities), "capex": i.capex,
            "depreciation_years": i.depreciation_years, "annual_fixed_cost": i.annual_fixed_cost,
            "label": i.label,
        } for i in system.investments],
        "series_refs": {
            "demand": [{"node": n, "resource": r, "path": series_paths[f"demand:{n}:{r}"]}
                       for n, r in scenario.demand],
            "purchase_price": [{"market": m, "path": series_paths[f"buy:{m}"]}
                               for m in scenario.purchase_price],
            "sale_price": [{"market": m, "path": series_paths[f"sell:{m}"]}
                           for m in scenario.sale_price],
        },
    }


def save_scenario(system: MultiEnergySystem, scenario: Scenario, path) -> list[Path]:
    """Write the JSON document and one CSV per series next to it; returns written paths."""
    path = Path(path)
    folder = path.parent
    folder.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    series_dir = folder / f"{stem}_series"
    series_dir.mkdir(exist_ok=True)
    written = []
    paths: dict[str, str] = {}

    def emit(key, fname, values):
        target = series_dir / fname
        write_timeseries_csv(target, values)
        written.append(target)
        paths[key] = os.path.relpath(target, folder).replace(os.sep, "/")

    for (n, r), vals in scenario.demand.items():
        emit(f"demand:{n}:{r}", f"demand_{n}_{r}.csv", vals)
    for m, vals in scenario.purchase_price.items():
        emit(f"buy:{m}", f"purchase_{m}.csv", vals)
    for m, vals in scenario.sale_price.items():
        emit(f"sell:{m}", f"sale_{m}.csv", vals)
    doc = scenario_document(system, scenario, paths)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    written.append(path)
    return written

"""Report bundle: catalog.json, pareto.csv, investments.csv, plot.csv."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from ..pareto import CLASSES, SolutionCatalog

SIG = 6


@dataclass(frozen=True)
class ReportBundle:
    catalog: Path
    pareto: Path
    investments: Path
    plot: Path

    def paths(self) -> list[Path]:
        return [self.catalog, self.pareto, self.investments, self.plot]


def fmt(v) -> str:
    """Six significant digits; empty cell for missing values."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.{SIG}g}"


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_reports(catalog: SolutionCatalog, out_dir) -> ReportBundle:
    if not catalog.points:
        raise ValueError("catalog has no points")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    bad = set(catalog.classification.values()) - set(CLASSES)
    if bad:
        raise ValueError(f"unknown classification labels {sorted(bad)}")
    points = sorted(catalog.points, key=lambda p: p.step)
    bundle = ReportBundle(out / "catalog.json", out / "pareto.csv", out / "investments.csv",
                          out / "plot.csv")

    bundle.catalog.write_text(json.dumps(_jsonable(catalog.to_dict()), indent=2) + "\n",
                              encoding="utf-8")
    cur, unit = catalog.currency, catalog.emission_unit
    _csv(bundle.pareto,
         ["step", f"cost_{cur}", f"emissions_{unit}", "normalized_cost",
          "normalized_emissions", "status"],
         [[fmt(p.step), fmt(p.cost), fmt(p.emissions), fmt(p.normalized_cost),
           fmt(p.normalized_emissions), "failed" if p.failed else p.solve_meta.get("status", "")]
          for p in points])
    ok = [p for p in points if not p.failed]
    _csv(bundle.investments,
         ["investment", "label"] + [fmt(p.step) for p in ok] + ["classification"],
         [[inv, catalog.labels.get(inv, inv)]
          + [str(int(p.investment_vector.get(inv, 0))) for p in ok]
          + [label] for inv, label in catalog.classification.items()])
    _csv(bundle.plot, ["normalized_cost", "normalized_emissions"],
         [[fmt(p.normalized_cost), fmt(p.normalized_emissions)] for p in ok])
    return bundle


def read_pareto_csv(path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))

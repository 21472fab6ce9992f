"""Scenario ingestion and report emission."""
from .reports import ReportBundle, emit_reports, read_pareto_csv
from .scenario import (
    ScenarioError,
    bundled_example,
    load_scenario,
    load_timeseries_csv,
    read_scenario,
    save_scenario,
    schema_errors,
    write_timeseries_csv,
)

__all__ = [
    "ReportBundle",
    "ScenarioError",
    "bundled_example",
    "emit_reports",
    "load_scenario",
    "load_timeseries_csv",
    "read_pareto_csv",
    "read_scenario",
    "save_scenario",
    "schema_errors",
    "write_timeseries_csv",
]

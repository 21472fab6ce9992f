"""Run an out-of-process MIP solver through a shell command template.

The exchange is an MPS model file going out and a plain ``name value``
solution file coming back. Besides the optional ``=obj=`` line the parser
accepts ``=status=``, ``=bound=`` and ``=gap=`` lines so an adapter can report
infeasibility or a proven bound; a file consisting only of ``=status=
infeasible`` is a valid answer.
"""
from __future__ import annotations

import importlib.util
import json
import math
import os
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..milp.model import MilpModel
from ..solver.audit import audit_solution
from ..solver.result import STATUSES, SolveConfig, SolveResult
from .mps import write_mps

RESIDUAL_LIMIT = 1e-5
PLACEHOLDERS = ("model_path", "solution_path", "rel_gap", "time_limit")


class SolverFailureError(RuntimeError):
    def __init__(self, message: str, returncode: int | None = None, output: str = ""):
        self.returncode = returncode
        self.output = output
        super().__init__(message if not output else f"{message}\n{output}")


class SolutionParseError(ValueError):
    pass


@dataclass(frozen=True)
class SolverAdapterConfig:
    command_template: str
    solution_format: str = "name-value-pairs"
    working_dir: str | None = None

    def __post_init__(self):
        for key in ("model_path", "solution_path"):
            if "{" + key + "}" not in self.command_template:
                raise ValueError(f"command_template lacks {{{key}}}")
        if self.solution_format != "name-value-pairs":
            raise ValueError(f"unsupported solution_format {self.solution_format!r}")

    @classmethod
    def from_file(cls, path) -> "SolverAdapterConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(data) - {"command_template", "solution_format", "working_dir"}
        if unknown:
            raise ValueError(f"unknown adapter keys: {sorted(unknown)}")
        return cls(**data)


def _runner_adapter(module: str) -> SolverAdapterConfig:
    py = shlex.quote(sys.executable)
    return SolverAdapterConfig(
        f"{py} -m dhplan.bridge.{module} {{model_path}} {{solution_path}}"
        " --gap {rel_gap} --time-limit {time_limit}"
    )


def highs_adapter() -> SolverAdapterConfig:
    """Adapter running the bundled HiGHS wrapper with the current interpreter."""
    return _runner_adapter("highs_runner")


def scip_adapter() -> SolverAdapterConfig:
    """Adapter running the bundled SCIP wrapper (needs PySCIPOpt)."""
    return _runner_adapter("scip_runner")


def default_adapter() -> SolverAdapterConfig:
    """SCIP when PySCIPOpt is installed, HiGHS otherwise."""
    if importlib.util.find_spec("pyscipopt") is not None:
        return scip_adapter()
    return highs_adapter()


def render_command(template: str, **values) -> list[str]:
    quoted = {k: shlex.quote(str(v)) for k, v in values.items()}
    return shlex.split(template.format(**quoted))


@dataclass
class ParsedSolution:
    values: dict[str, float]
    objective: float | None = None
    status: str | None = None
    bound: float | None = None
    gap: float | None = None


def parse_solution(path) -> ParsedSolution:
    out = ParsedSolution({})
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = raw.split()
        if not fields or fields[0].startswith("#"):
            continue
        # names may contain '#', so only a whitespace-separated '#' opens a comment
        for k, tok in enumerate(fields):
            if tok.startswith("#"):
                fields = fields[:k]
                break
        if len(fields) != 2:
            raise SolutionParseError(f"line {lineno}: expected 'name value', got {raw!r}")
        key, val = fields
        if key == "=status=":
            if val not in STATUSES:
                raise SolutionParseError(f"line {lineno}: unknown status {val!r}")
            out.status = val
            continue
        try:
            num = float(val)
        except ValueError:
            raise SolutionParseError(f"line {lineno}: not a number: {val!r}") from None
        if key == "=obj=":
            out.objective = num
        elif key == "=bound=":
            out.bound = num
        elif key == "=gap=":
            out.gap = num
        else:
            out.values[key] = num
    return out


def _run_dir(adapter: SolverAdapterConfig) -> Path:
    base = adapter.working_dir or os.environ.get("DHPLAN_WORKDIR") or None
    if base:
        Path(base).mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix="dhplan-run-", dir=base))


def run_external(model: MilpModel, adapter: SolverAdapterConfig,
                 solve_config: SolveConfig | None = None, objective: str | None = None,
                 sense: str | None = None) -> SolveResult:
    config = solve_config or SolveConfig()
    objective = objective or next(iter(model.objectives))
    if sense is not None and sense != model.sense:
        raise ValueError("external runs use the model's own sense")
    t0 = time.perf_counter()
    run = _run_dir(adapter)
    model_path = run / "model.mps"
    solution_path = run / "solution.txt"
    write_mps(model.with_objective_first(objective), model_path)
    limit = config.time_limit if math.isfinite(config.time_limit) else "inf"
    cmd = render_command(adapter.command_template, model_path=model_path,
                         solution_path=solution_path, rel_gap=config.rel_gap, time_limit=limit)
    try:
        proc = subprocess.run(cmd, cwd=run, capture_output=True, text=True)
    except OSError as exc:
        raise SolverFailureError(f"cannot execute {cmd[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        raise SolverFailureError(f"solver exited with code {proc.returncode}", proc.returncode,
                                 (proc.stdout + proc.stderr)[-4000:])
    if not solution_path.exists():
        raise SolverFailureError("solver produced no solution file", 0,
                                 (proc.stdout + proc.stderr)[-4000:])
    parsed = parse_solution(solution_path)
    names = tuple(v.name for v in model.variables)
    status = parsed.status or "optimal"
    if status in ("infeasible", "unbounded") or (parsed.status and not parsed.values):
        return SolveResult(status, None, names,
                           best_bound=parsed.bound if parsed.bound is not None else math.nan,
                           wall_time=time.perf_counter() - t0, message=str(run))
    missing = [n for n in names if n not in parsed.values]
    if missing:
        raise SolutionParseError(
            f"solution misses {len(missing)} variables, first: {missing[:10]}")
    x = np.array([parsed.values[n] for n in names])
    report = audit_solution(model, x, bound_tol=RESIDUAL_LIMIT,
                            integer_tolerance=max(config.integer_tolerance, RESIDUAL_LIMIT))
    obj = model.evaluate(objective, x)
    message = str(run)
    if report.max_residual > RESIDUAL_LIMIT or not report.clean:
        status = "solver_failure"
        message = f"audit failed: residual {report.max_residual:.3g} at {report.worst_row}"
    gap = parsed.gap if parsed.gap is not None else 0.0
    if status == "optimal" and gap > 0:
        status = "gap_reached"
    return SolveResult(
        status=status,
        values=x,
        names=names,
        objective_value=obj,
        objectives={k: e.value(x) for k, e in model.objectives.items()},
        best_bound=parsed.bound if parsed.bound is not None else math.nan,
        rel_gap=gap,
        wall_time=time.perf_counter() - t0,
        message=message,
    )

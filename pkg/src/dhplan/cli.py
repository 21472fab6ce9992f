"""``dhplan`` command line.

Exit codes: 0 success, 1 diagnostics or no solution, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .bridge import SolverAdapterConfig, write_mps
from .io import ScenarioError, emit_reports, read_scenario, save_scenario
from .milp import ValidationError, assemble
from .pareto import DEFAULT_GAP, AnchorError, SolveRequest, SweepConfig, make_solver, run_sweep
from .solver import ModelTooLargeError, SolveConfig
from .synthetic import generate_synthetic_instance


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dhplan", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")

    p = sub.add_parser("build", help="assemble the MILP and write it as MPS")
    p.add_argument("scenario")
    p.add_argument("--mps", required=True)
    p.add_argument("--objective", choices=("cost", "emissions"), default="cost")

    solver_help = "builtin branch-and-bound, external adapter, or auto by model size"
    p = sub.add_parser("solve", help="solve one objective")
    p.add_argument("scenario")
    p.add_argument("--gap", type=float, default=SolveConfig.rel_gap)
    p.add_argument("--objective", choices=("cost", "emissions"), default="cost")
    p.add_argument("--solver", choices=("builtin", "external", "auto"), default="auto",
                   help=solver_help)
    p.add_argument("--adapter", help="JSON file with an adapter configuration")
    p.add_argument("--time-limit", type=float, default=math.inf)
    p.add_argument("--solution", help="write 'name value' lines here")

    p = sub.add_parser("pareto", help="lexicographic cost/emission sweep")
    p.add_argument("scenario")
    p.add_argument("--steps", type=_floats)
    p.add_argument("--gaps", type=_floats,
                   help="one gap per step, or a single gap for all steps")
    p.add_argument("--out", default="reports")
    p.add_argument("--solver", choices=("builtin", "external", "auto"), default="auto",
                   help=solver_help)
    p.add_argument("--adapter")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--time-limit", type=float, default=math.inf)

    p = sub.add_parser("gen", help="write a synthetic scenario")
    p.add_argument("--regions", type=int, required=True)
    p.add_argument("--units", type=int, required=True)
    p.add_argument("--invest", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return ap


def _err(*lines) -> None:
    for line in lines:
        print(line, file=sys.stderr)


def _load(path):
    system, scenario, diags = read_scenario(path)
    if diags:
        raise ScenarioError([str(d) for d in diags])
    return system, scenario


def _adapter(args):
    return SolverAdapterConfig.from_file(args.adapter) if args.adapter else None


def _sweep_config(args, parser) -> SweepConfig:
    steps = tuple(args.steps) if args.steps else SweepConfig().relaxation_steps
    base = SolveConfig(time_limit=args.time_limit)
    kw = {"relaxation_steps": steps, "solver": args.solver, "base": base,
          "workers": max(1, args.workers)}
    if args.gaps:
        if len(args.gaps) == 1:
            kw.update(gap_schedule={}, default_gap=args.gaps[0])
        elif len(args.gaps) == len(steps):
            kw.update(gap_schedule=dict(zip(steps, args.gaps)), default_gap=DEFAULT_GAP)
        else:
            parser.error(f"--gaps has {len(args.gaps)} values for {len(steps)} steps")
    try:
        return SweepConfig(**kw)
    except ValueError as exc:
        parser.error(str(exc))


def _cmd_validate(args) -> int:
    _load(args.scenario)
    print(f"{args.scenario}: ok")
    return 0


def _cmd_build(args) -> int:
    system, scenario = _load(args.scenario)
    model = assemble(system, scenario)
    size = write_mps(model.with_objective_first(args.objective), args.mps)
    counts = model.counts()
    print(json.dumps({"mps": args.mps, "bytes": size, **counts}))
    return 0


def _cmd_solve(args) -> int:
    system, scenario = _load(args.scenario)
    model = assemble(system, scenario)
    config = SolveConfig(rel_gap=args.gap, time_limit=args.time_limit)
    sweep = SweepConfig(solver=args.solver)
    solver = make_solver(sweep, _adapter(args))
    res = solver(SolveRequest(model, args.objective, config))
    out = res.summary()
    out["objectives"] = res.objectives
    print(json.dumps(out, default=str))
    if res.has_solution and args.solution:
        lines = [f"=obj= {res.objective_value!r}"]
        lines += [f"{n} {float(v)!r}" for n, v in zip(res.names, res.values)]
        Path(args.solution).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0 if res.has_solution and res.status != "solver_failure" else 1


def _cmd_pareto(args, parser) -> int:
    sweep = _sweep_config(args, parser)
    system, scenario = _load(args.scenario)
    solver = make_solver(sweep, _adapter(args))
    catalog = run_sweep(system, scenario, sweep, solver)
    bundle = emit_reports(catalog, args.out)
    failed = [p for p in catalog.points if p.failed]
    for p in failed:
        _err(f"step {p.step:g}: {p.error}")
    print(json.dumps({"anchor_cost": catalog.anchor_cost, "points": len(catalog.points),
                      "failed": len(failed), "reports": [str(p) for p in bundle.paths()]}))
    return 1 if failed else 0


def _cmd_gen(args) -> int:
    system, scenario = generate_synthetic_instance(args.regions, args.units, args.invest,
                                                   args.steps, args.seed)
    written = save_scenario(system, scenario, args.out)
    print(f"wrote {written[-1]} and {len(written) - 1} series files")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "build":
            return _cmd_build(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "pareto":
            return _cmd_pareto(args, parser)
        return _cmd_gen(args)
    except ScenarioError as exc:
        _err(*exc.problems)
    except ValidationError as exc:
        _err(*(str(d) for d in exc.diagnostics))
    except AnchorError as exc:
        _err(str(exc))
    except (ModelTooLargeError, ValueError, OSError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
    return 1


if __name__ == "__main__":
    sys.exit(main())

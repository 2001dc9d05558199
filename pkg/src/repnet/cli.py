"""Command line entry point: ``repnet validate|run|plan``.

Exit codes: 0 success, 1 validation failure, 2 usage or runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .model import SCOPES
from .planner import plan
from .scenario import ScenarioError, load_scenario
from .simulator import RunError, derive_metrics, run_episode
from .traceio import emit_metrics_csv, emit_trace_csv, fmt

EXIT_OK, EXIT_INVALID, EXIT_ERROR = 0, 1, 2


def _hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--scope", choices=SCOPES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repnet", description="Reputation-driven planning engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario and print every violation")
    p.add_argument("scenario")

    p = sub.add_parser("run", help="simulate an episode and write trace and metric CSVs")
    p.add_argument("scenario")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."))
    _hyper_flags(p)

    p = sub.add_parser("plan", help="print q-values for one epistemic state")
    p.add_argument("scenario")
    p.add_argument("--state", required=True)
    p.add_argument("--agent", help="planning agent (default: the first one)")
    _hyper_flags(p)
    return parser


def _override(hyper, args):
    changes = {k: getattr(args, k) for k in ("depth", "gamma", "eta", "delta", "scope")
               if getattr(args, k, None) is not None}
    if getattr(args, "steps", None) is not None:
        changes["horizon"] = args.steps
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return dataclasses.replace(hyper, **changes)


def _load(ref):
    try:
        return load_scenario(ref), None
    except ScenarioError as exc:
        return None, exc


def cmd_validate(args) -> int:
    scenario, err = _load(args.scenario)
    if err is not None:
        print(err)
        for v in err.violations:
            print(f"  {v}")
        return EXIT_INVALID
    print(f"{scenario.name or args.scenario}: ok")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario, err = _load(args.scenario)
    if err is not None:
        print(err, file=sys.stderr)
        return EXIT_INVALID
    hyper = _override(scenario.hyper, args)
    trace = run_episode(scenario, hyper)
    metrics = derive_metrics(trace)
    args.out.mkdir(parents=True, exist_ok=True)
    emit_trace_csv(trace, None, args.out / "trace.csv")
    emit_metrics_csv(metrics, args.out / "metrics.csv")
    print(f"wrote {len(trace.records)} records to {args.out / 'trace.csv'}")
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario, err = _load(args.scenario)
    if err is not None:
        print(err, file=sys.stderr)
        return EXIT_INVALID
    sysm = scenario.system
    hyper = _override(scenario.hyper, args)
    agents = scenario.planning_agents()
    if not agents:
        print("scenario has no planning agent", file=sys.stderr)
        return EXIT_ERROR
    g = sysm.agent(args.agent) if args.agent else agents[0]
    s = sysm.state(args.state)
    k = scenario.knowledge[g]
    result = plan(sysm, k, k.epistemic(s), hyper)
    print(f"agent {sysm.agents[g]} state {sysm.states[s]} depth {hyper.depth}")
    for a, q in sorted(result.q_values.items()):
        print(f"q {sysm.actions[a]} {fmt(q)}")
    print(f"best {sysm.actions[result.action]} {fmt(result.value)}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"validate": cmd_validate, "run": cmd_run, "plan": cmd_plan}[args.command](args)
    except (RunError, FileNotFoundError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: `python -m tcr <command> SCENARIO [options]`.

SCENARIO is a path to a scenario file or the name of a bundled scenario. Reports go
to standard output, logs and errors to standard error. Exit status is 0 for success
or a positive verdict, 1 for a negative verdict, 2 for usage and input errors.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from tcr.utils.constraints import canonical_form, is_implementable, minimal_implementation
from tcr.utils.coordination import (
    broom_response_rule,
    bruteforce_response_rule,
    check_solvability,
    optimal_response_rule,
    worst_case_latest_response,
)
from tcr.utils.dot_export import render_run_dot
from tcr.utils.errors import CommandArgumentError, NotImplementableError, TcrError
from tcr.utils.extended import format_extended
from tcr.utils.oracle import TCR_ORACLE_SAMPLES, TCR_SELFTEST_SEED, compare_oracle
from tcr.utils.reports import (
    assignment_frame,
    canonical_form_frame,
    export_to_csv,
    export_to_excel,
    format_table,
    response_table,
    solvability_frame,
    trace_frame,
)
from tcr.utils.runtime import apply_rule, enumerate_runs, never_respond, simulate, trace_lines
from tcr.utils.scenario_io import Scenario, resolve_scenario
from tcr.utils.selftest import run_selftest
from tcr.utils.syncausality import find_brooms, find_centibroom, has_path_traversing_centipede

load_dotenv()

TCR_LOG_LEVEL = os.getenv("TCR_LOG_LEVEL", "INFO")

logger = logging.getLogger("tcr")

RULES = ("optimal", "bruteforce", "broom", "none")


def _rule(name: str, scenario: Scenario):
    spec = scenario.spec
    if name == "optimal":
        return optimal_response_rule(spec)
    if name == "bruteforce":
        return bruteforce_response_rule(spec, scenario.oracle.path_budget)
    if name == "broom":
        return broom_response_rule(spec)
    return never_respond


def _parse_times(text: str, scenario: Scenario) -> dict[str, int]:
    times = {}
    for item in filter(None, text.split(",")):
        agent, _, value = item.partition("=")
        agent = agent.strip()
        if agent not in scenario.context.agents:
            raise CommandArgumentError(f"--times names agent {agent!r}, not an agent of {scenario.name}")
        try:
            times[agent] = int(value)
        except ValueError:
            raise CommandArgumentError(f"--times value {value!r} for agent {agent!r} is not an integer") from None
    return times


def _horizon(scenario: Scenario, args: argparse.Namespace) -> int:
    if args.horizon is None:
        return scenario.oracle.horizon
    if args.horizon < 0:
        raise CommandArgumentError(f"--horizon must be >= 0, got {args.horizon}")
    return args.horizon


def _write(path: str, content: str | bytes) -> None:
    target = Path(path)
    if isinstance(content, bytes):
        target.write_bytes(content)
    else:
        target.write_text(content, encoding="utf-8")
    logger.info("wrote %s", target)


def cmd_canon(scenario: Scenario, args: argparse.Namespace) -> int:
    frame = canonical_form_frame(canonical_form(scenario.spec.delta))
    print(format_table(frame, index=True))
    return 0


def cmd_implementable(scenario: Scenario, args: argparse.Namespace) -> int:
    verdict = is_implementable(scenario.spec.delta)
    print("implementable" if verdict else "not implementable")
    return 0 if verdict else 1


def cmd_min_impl(scenario: Scenario, args: argparse.Namespace) -> int:
    try:
        times = minimal_implementation(scenario.spec.delta)
    except NotImplementableError as exc:
        print(f"not implementable: {exc}")
        return 1
    print(format_table(assignment_frame(times)))
    return 0


def cmd_solvable(scenario: Scenario, args: argparse.Namespace) -> int:
    try:
        report = check_solvability(scenario.spec)
    except NotImplementableError as exc:
        print(f"not implementable: {exc}")
        return 1
    if args.json:
        print(json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True))
        return 0 if report.solvable else 1
    print("solvable" if report.solvable else "not solvable")
    print(f"components: {' '.join('{' + ','.join(c) + '}' for c in report.sccs)}")
    print(f"reduction: {report.reduction}")
    print(format_table(solvability_frame(report)))
    for reason in report.reasons:
        print(f"reason: {reason}")
    return 0 if report.solvable else 1


def cmd_bound(scenario: Scenario, args: argparse.Namespace) -> int:
    print(format_extended(worst_case_latest_response(scenario.spec)))
    return 0


def cmd_simulate(scenario: Scenario, args: argparse.Namespace) -> int:
    horizon = _horizon(scenario, args)
    run = simulate(scenario.context, _rule(args.rule, scenario), scenario.schedule(args.schedule), horizon)
    print("\n".join(trace_lines(run)))
    if args.csv:
        _write(args.csv, export_to_csv(trace_frame(run)))
    return 0


def cmd_detect(scenario: Scenario, args: argparse.Namespace) -> int:
    spec = scenario.spec
    horizon = _horizon(scenario, args)
    run = simulate(scenario.context, never_respond, scenario.schedule(args.schedule), horizon)
    if args.structure == "broom":
        times = _parse_times(args.times, scenario)
        brooms = find_brooms(run, spec.trigger, sorted(times), times)
        if not brooms:
            print("no broom found")
            return 1
        print("brooms: " + " ".join(e.label for e in brooms))
        shown = tuple(brooms[:1])
    elif args.structure == "centipede":
        path = [a.strip() for a in args.path.split(",") if a.strip()]
        result = has_path_traversing_centipede(run, spec.trigger, path, spec.delta, args.t)
        if result.clipped:
            print("clipped: the path's end nodes leave the simulated window")
            return 1
        if not result.found:
            print("no centipede found")
            return 1
        shown = result.events
        print("centipede: " + " ".join(e.label for e in shown))
    else:
        groups = [[a.strip() for a in g.split(",") if a.strip()] for g in args.groups.split(";")]
        chain = find_centibroom(run, spec.trigger, groups, _parse_times(args.times, scenario))
        if chain is None:
            print("no centibroom found")
            return 1
        shown = chain
        print("centibroom: " + " ".join(e.label for e in shown))
    if args.dot:
        _write(args.dot, render_run_dot(run, highlight=shown, title=scenario.name))
    return 0


def cmd_table(scenario: Scenario, args: argparse.Namespace) -> int:
    horizon = _horizon(scenario, args)
    names = [r.strip() for r in args.rules.split(",") if r.strip()]
    runs = enumerate_runs(scenario.context, never_respond, horizon, scenario.oracle.max_runs)
    tables = {name: apply_rule(runs, _rule(name, scenario)) for name in names}
    frame = response_table(scenario.spec, tables)
    if args.csv:
        _write(args.csv, export_to_csv(frame))
    if args.xlsx:
        _write(args.xlsx, export_to_excel(frame))
    if not (args.csv or args.xlsx):
        print(format_table(frame))
    return 0


def cmd_oracle_equiv(scenario: Scenario, args: argparse.Namespace) -> int:
    horizon = _horizon(scenario, args)
    result = compare_oracle(
        scenario.spec,
        horizon,
        name=scenario.name,
        cap=scenario.oracle.max_runs,
        samples=args.samples,
    )
    print(f"runs: {result.runs}  guarded points: {result.guarded_points}")
    for flag in ("coordinated", "stable", "maximal", "nd_knowledge"):
        print(f"{flag}: {'yes' if getattr(result, flag) else 'NO'}")
    if result.f_equals_g is not None:
        print(f"f equals g: {'yes' if result.f_equals_g else 'NO'}")
    else:
        print(f"f equals g: skipped ({'; '.join(result.exact_shift_unmet)})")
    for line in result.disagreements:
        print(f"DISAGREE {line}")
    if result.agree:
        print("AGREE on all guarded points")
        return 0
    print("DISAGREE")
    return 1


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest(seed=args.seed)
    for result in results:
        status = "ok" if result.passed else "FAIL"
        print(f"{status:4} {result.name}: {result.checked} checked, {len(result.failures)} failures")
        for failure in result.failures[:10]:
            print(f"     {failure}")
    return 0 if all(r.passed for r in results) else 1


SCENARIO_COMMANDS = {
    "canon": cmd_canon,
    "implementable": cmd_implementable,
    "min-impl": cmd_min_impl,
    "solvable": cmd_solvable,
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "table": cmd_table,
    "oracle-equiv": cmd_oracle_equiv,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcr", description="Timely-coordinated response toolkit.")
    parser.add_argument("--log-level", default=TCR_LOG_LEVEL, help="root log level (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", help="scenario file or bundled scenario name")
        return p

    scenario_command("canon", "print the canonical form of the constraints")
    scenario_command("implementable", "decide whether the constraints can be met")
    scenario_command("min-impl", "print the least implementation")
    solvable = scenario_command("solvable", "decide solvability in the scenario's context")
    solvable.add_argument("--json", action="store_true", help="print the report as JSON")
    scenario_command("bound", "print the worst-case latest response after the trigger")

    simulate_p = scenario_command("simulate", "simulate one named schedule and print its trace")
    simulate_p.add_argument("--schedule", required=True)
    simulate_p.add_argument("--rule", choices=RULES, default="optimal")
    simulate_p.add_argument("--horizon", type=int)
    simulate_p.add_argument("--csv", help="also write the trace as CSV")

    detect = scenario_command("detect", "look for a causal structure in one simulated run")
    detect.add_argument("--schedule", required=True)
    detect.add_argument("--structure", choices=("broom", "centipede", "centibroom"), required=True)
    detect.add_argument("--times", default="", help="agent=time pairs, e.g. 1=2,2=2")
    detect.add_argument("--path", default="", help="constraint-graph path, e.g. 1,2")
    detect.add_argument("--t", type=int, default=0, help="start time of the path")
    detect.add_argument("--groups", default="", help="agent groups, e.g. '1;2,3'")
    detect.add_argument("--horizon", type=int)
    detect.add_argument("--dot", help="write a DOT space-time diagram here")

    table = scenario_command("table", "response times of every enumerated run")
    table.add_argument("--rules", default="optimal", help="comma-separated rules")
    table.add_argument("--horizon", type=int)
    table.add_argument("--csv")
    table.add_argument("--xlsx")

    oracle = scenario_command("oracle-equiv", "compare knowledge fixed points with the optimal rule")
    oracle.add_argument("--horizon", type=int)
    oracle.add_argument("--samples", type=int, default=TCR_ORACLE_SAMPLES)

    selftest = sub.add_parser("selftest", help="run the property suites")
    selftest.add_argument("--seed", type=int, default=TCR_SELFTEST_SEED)
    return parser


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    try:
        if args.command == "selftest":
            return cmd_selftest(args)
        scenario = resolve_scenario(args.scenario)
        return SCENARIO_COMMANDS[args.command](scenario, args)
    except (TcrError, KeyError, FileNotFoundError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) else str(exc)
        print(f"error: {message}", file=sys.stderr)
        return 2


def main(argv: list[str] | None = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())

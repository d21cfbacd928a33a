"""``nplan`` command line.

Exit codes: 0 success, 1 usage or parse error, 2 invalid problem,
3 no plan / check failed, 4 search stopped by its time budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aspgen import AnswerSet, AspError, cross_check, emit_base_program, parse_answer_sets
from .model import Problem, ProblemError, ProblemSyntaxError, load_problem, validate_problem
from .planner import SearchConfig, enumerate_plans, optimal_plans
from .report import render_timeline, write_report
from .semantics import Schedule

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_FAILED, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _horizon(text: str) -> int:
    try:
        q = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid horizon {text!r}") from None
    if q < 1:
        raise argparse.ArgumentTypeError("horizon must be ≥ 1")
    return q


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--horizon", type=_horizon, required=True, help="number of time steps q")
    search.add_argument("--mode", choices=["start", "start-end"], default="start",
                        help="when a subject action counts as inside a norm window")
    search.add_argument("--pending", choices=["ignore", "violate", "comply"], default="ignore",
                        help="how norm instances unresolved at the horizon are scored")
    search.add_argument("--time-budget", type=float, default=None, metavar="SECONDS")

    parser = _Parser(prog="nplan", description="Normative planning over durative actions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a problem file")
    p.add_argument("file")

    p = sub.add_parser("plan", parents=[common, search], help="enumerate plans")
    p.add_argument("file")
    cap = p.add_mutually_exclusive_group()
    cap.add_argument("--all", action="store_true", help="print every plan (default)")
    cap.add_argument("--max", type=int, default=None, metavar="N")
    p.add_argument("--min-utility", type=int, default=None, metavar="U")
    p.add_argument("--report", metavar="DIR", help="write plans.csv and timeline figures here")

    p = sub.add_parser("optimal", parents=[common, search], help="find utility-maximal plans")
    p.add_argument("file")
    p.add_argument("--max", type=int, default=None, metavar="N", help="collect at most N optimal plans")
    p.add_argument("--report", metavar="DIR", help="write plans.csv and timeline figures here")

    p = sub.add_parser("emit-asp", help="write the answer-set program for a problem")
    p.add_argument("file")
    p.add_argument("--horizon", type=_horizon, required=True)
    p.add_argument("--optimize", action="store_true", help="append the utility optimisation rules")
    p.add_argument("-o", "--output", metavar="OUT", help="output file (default stdout)")

    p = sub.add_parser("check", parents=[common, search], help="check answer sets or plan schedules")
    p.add_argument("file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--answer-set", metavar="PATH", help="solver models, one per line")
    src.add_argument("--schedule", metavar="PATH", help="JSON output of `plan` or `optimal`")
    return parser


def _config(args, max_plans=None) -> SearchConfig:
    return SearchConfig(
        horizon=args.horizon,
        mode=args.mode,
        pending_policy=args.pending,
        max_plans=max_plans,
        time_budget=args.time_budget,
    )


def _load(path: str) -> Problem:
    if not Path(path).is_file():
        raise UsageError(f"no such file: {path}")
    return load_problem(path)


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(human)


def cmd_validate(args) -> int:
    if not Path(args.file).is_file():
        raise UsageError(f"no such file: {args.file}")
    problem = load_problem(args.file, strict=False)
    report = validate_problem(problem)
    lines = [str(f) for f in report.findings]
    lines.append(
        f"{args.file}: {len(report.errors)} error(s), {len(report.warnings)} warning(s)"
    )
    _emit(args, report.to_dict(), "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_plan(args) -> int:
    problem = _load(args.file)
    stream = enumerate_plans(problem, _config(args, args.max), min_utility=args.min_utility)
    plans = []
    for i, plan in enumerate(stream, 1):
        plans.append(plan)
        if not args.json:
            print(render_timeline(problem, plan, args.horizon, i))
            print()
    if args.json:
        print(json.dumps({
            "count": len(plans),
            "truncated": stream.truncated,
            "plans": [p.to_dict() for p in plans],
        }, indent=2))
    else:
        note = f" (stopped: {stream.reason})" if stream.truncated else ""
        print(f"{len(plans)} plans{note}")
    if args.report:
        write_report(problem, plans, args.horizon, args.report)
    return EXIT_BUDGET if stream.reason == "time_budget" else EXIT_OK


def cmd_optimal(args) -> int:
    problem = _load(args.file)
    result = optimal_plans(problem, _config(args, args.max))
    if args.json:
        print(json.dumps({
            "max_utility": result.max_utility,
            "certified": result.certified,
            "truncated": result.truncated,
            "plans": [p.to_dict() for p in result.plans],
        }, indent=2))
    elif result.max_utility is None:
        print("no plan")
    else:
        print(f"max utility: {result.max_utility}")
        more = " (more exist)" if result.truncated and result.certified else ""
        print(f"optimal plans: {len(result.plans)}{more}")
        if not result.certified:
            print("warning: time budget exhausted; best found so far, optimality not certified")
        for i, plan in enumerate(result.plans, 1):
            print()
            print(render_timeline(problem, plan, args.horizon, i))
    if args.report and result.plans:
        write_report(problem, list(result.plans), args.horizon, args.report)
    if not result.certified:
        return EXIT_BUDGET
    return EXIT_OK if result.max_utility is not None else EXIT_FAILED


def cmd_emit_asp(args) -> int:
    problem = _load(args.file)
    program = emit_base_program(problem, args.horizon)
    text = program.text(optimize=args.optimize)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _schedules_from_json(path: str) -> list[AnswerSet]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        plans = doc["plans"] if isinstance(doc, dict) else doc
        out = []
        for plan in plans:
            sched = Schedule(tuple((str(a), int(t)) for a, t in plan["schedule"]))
            out.append(AnswerSet(frozenset(), sched, plan.get("utility")))
        return out
    except (ValueError, KeyError, TypeError) as exc:
        raise ProblemSyntaxError(f"cannot read schedules from {path}: {exc}") from exc


def cmd_check(args) -> int:
    problem = _load(args.file)
    cfg = _config(args)
    if args.answer_set:
        path = Path(args.answer_set)
        if not path.is_file():
            raise UsageError(f"no such file: {path}")
        answers = parse_answer_sets(path.read_text(encoding="utf-8"), problem)
    else:
        if not Path(args.schedule).is_file():
            raise UsageError(f"no such file: {args.schedule}")
        answers = _schedules_from_json(args.schedule)
    if not answers:
        raise UsageError("no answer sets found")
    checks = [cross_check(problem, args.horizon, a, cfg) for a in answers]
    ok = all(c.ok for c in checks)
    _emit(
        args,
        {"ok": ok, "checks": [c.to_dict() for c in checks]},
        "\n".join(f"[{'ok' if c.ok else 'FAIL'}] {c.describe()}" for c in checks),
    )
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "validate": cmd_validate,
    "plan": cmd_plan,
    "optimal": cmd_optimal,
    "emit-asp": cmd_emit_asp,
    "check": cmd_check,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"nplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProblemSyntaxError as exc:
        print(f"nplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProblemError as exc:
        print(f"nplan: invalid problem: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except AspError as exc:
        print(f"nplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nplan: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

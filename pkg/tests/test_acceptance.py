"""Acceptance gate: one PASS/FAIL line per criterion.

Criterion 7 needs an external solver named by ``NPLAN_SOLVER`` (a command
line, e.g. ``clingo`` or ``python3 -m clingo``) and is skipped otherwise.
"""

from __future__ import annotations

import os
import random
import shlex
import subprocess
import time

import pytest

from normplan.aspgen import cross_check, emit_base_program, parse_answer_sets
from normplan.model import DurativeAction, Goal, LiteralSet, Norm, Problem
from normplan.planner import (
    SearchConfig,
    achievable_utilities,
    enumerate_naive,
    enumerate_plans,
    optimal_plans,
)
from normplan.semantics import (
    ComplianceMode,
    ExecutionError,
    Schedule,
    Status,
    conflicting_actions,
    instantiate_norms,
    resolve_norms,
    simulate,
)

from .conftest import ACCEPTANCE
from .test_semantics import conflicts_by_definition


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


# --- deterministic random problems ------------------------------------------------


def rand_lits(rng: random.Random, fluents: list[str], k: int) -> LiteralSet:
    chosen = rng.sample(fluents, rng.randint(0, min(k, len(fluents))))
    return LiteralSet.of(f if rng.random() < 0.5 else "!" + f for f in chosen)


def rand_problem(rng: random.Random, max_actions=3, max_fluents=5) -> Problem:
    fluents = [f"f{i}" for i in range(rng.randint(1, max_fluents))]
    initial = [f for f in fluents if rng.random() < 0.4]
    actions = tuple(
        DurativeAction(f"a{i}", rand_lits(rng, fluents, 2), rand_lits(rng, fluents, 3), rng.randint(1, 3))
        for i in range(rng.randint(1, max_actions))
    )
    goals = tuple(
        Goal(f"g{i}", rand_lits(rng, fluents, 2), rng.randint(1, 20)) for i in range(rng.randint(1, 2))
    )
    names = [a.name for a in actions]
    norms = tuple(
        Norm(f"n{i}", rng.choice(["obligation", "prohibition"]), rng.choice(names), rng.choice(names),
             rng.randint(0, 4), rng.randint(1, 10))
        for i in range(rng.randint(0, 2))
    )
    return Problem(frozenset(fluents), frozenset(initial), actions, goals, norms, name="random")


def rand_schedule(rng: random.Random, p: Problem, q: int) -> Schedule:
    starts = rng.sample(range(q), rng.randint(0, q)) if q else []
    return Schedule(tuple((rng.choice(p.actions).name, t) for t in starts))


# --- criteria --------------------------------------------------------------------------


def test_criterion_1_scenario_utilities(disaster):
    t0 = time.monotonic()
    cfg = SearchConfig(13, mode=ComplianceMode.START)
    values = achievable_utilities(disaster, cfg)
    res = optimal_plans(disaster, SearchConfig(13, max_plans=1))
    took = time.monotonic() - t0
    ok = {25, 33, 43} <= values and max(values) == 43 and res.max_utility == 43 and res.certified and took <= 60
    report(1, ok, f"max {res.max_utility}, has 25/33/43: {({25, 33, 43} <= values)}, "
                  f"certified {res.certified}, {took:.1f}s")


def test_criterion_2_instantiation_arithmetic(disaster):
    (shock,) = instantiate_norms(disaster, Schedule.of(("detectShock", 3)))
    (poison,) = instantiate_norms(disaster, Schedule.of(("detectPoison", 5)))
    ok = shock.deadline_abs == 7 and poison.deadline_abs == 8
    report(2, ok, f"dl_ins {shock.deadline_abs} and {poison.deadline_abs}")


def test_criterion_3_conflicts(disaster):
    has_pair = frozenset(("evacuate", "buildShelter")) in conflicting_actions(disaster.actions)
    rng = random.Random(3)
    fluents = ["p", "q", "r", "s"]
    agree = 0
    for _ in range(200):
        acts = [DurativeAction(n, rand_lits(rng, fluents, 3), rand_lits(rng, fluents, 3), 1) for n in ("a", "b")]
        agree += set(conflicting_actions(acts)) == conflicts_by_definition(acts)
    report(3, has_pair and agree == 200, f"evacuate/buildShelter present {has_pair}, brute force agrees {agree}/200")


def test_criterion_4_oracle_equivalence():
    rng = random.Random(4)
    t0 = time.monotonic()
    same = 0
    for _ in range(100):
        p = rand_problem(rng)
        cfg = SearchConfig(rng.randint(0, 5))
        fast = {r.schedule: r.utility for r in enumerate_plans(p, cfg)}
        slow = {r.schedule: r.utility for r in enumerate_naive(p, cfg)}
        same += fast == slow
    took = time.monotonic() - t0
    report(4, same == 100 and took <= 120, f"{same}/100 identical, {took:.1f}s")


def _trace_invariants(p: Problem, s: Schedule, q: int) -> bool | None:
    """Inertia and frame containment; None when ``s`` does not execute."""
    try:
        trace = simulate(p, s, q)
    except ExecutionError:
        return None
    amap = p.action_map
    for k in range(1, q + 1):
        ending = [a for a, t in s if t + amap[a].duration == k]
        touched = set().union(*(amap[a].post.fluents for a in ending)) if ending else set()
        adds = set().union(*(amap[a].post.pos for a in ending)) if ending else set()
        dels = set().union(*(amap[a].post.neg for a in ending)) if ending else set()
        prev, cur = trace.states[k - 1], trace.states[k]
        # inertia
        if any((f in cur) != (f in prev) for f in p.fluents - touched):
            return False
        # frame containment
        if not (cur - prev <= adds and prev - cur <= dels):
            return False
    return True


def _norm_invariants(p: Problem, s: Schedule, q: int) -> bool:
    amap = p.action_map
    insts = instantiate_norms(p, s)
    for i in insts:
        if i.deadline_abs != i.norm.deadline + i.activation_time + amap[i.norm.condition].duration:
            return False
    loose = {r.key: r for r in resolve_norms(p, s, insts, ComplianceMode.START, q)}
    for r in resolve_norms(p, s, insts, ComplianceMode.START_END, q):
        if sum(r.status is st for st in Status) != 1:
            return False
        if (r.status is Status.PENDING) != (r.at is None):
            return False
        other = loose[r.key]
        if r.norm.is_obligation and r.status is Status.COMPLIED and other.status is not Status.COMPLIED:
            return False
        if not r.norm.is_obligation and r.status is Status.VIOLATED and other.status is not Status.VIOLATED:
            return False
    return True


def test_criterion_5_invariants():
    rng = random.Random(5)
    cases = failures = traces = 0
    # only executable schedules count as trace cases
    for _ in range(20000):
        if traces >= 250:
            break
        p = rand_problem(rng, max_fluents=4)
        q = rng.randint(1, 8)
        s = rand_schedule(rng, p, q)
        verdict = _trace_invariants(p, s, q)
        if verdict is None:
            continue
        traces += 1
        cases += 2
        failures += not verdict
        failures += not _norm_invariants(p, s, q)
    for _ in range(80):
        p = rand_problem(rng, max_fluents=4)
        q = rng.randint(0, 4)
        k = rng.randint(2, 9)
        base = optimal_plans(p, SearchConfig(q))
        scaled = optimal_plans(p.scaled(k), SearchConfig(q))
        cases += 1
        same = {r.schedule for r in base.plans} == {r.schedule for r in scaled.plans}
        failures += not (same and (base.max_utility is None or scaled.max_utility == k * base.max_utility))
        nxt = optimal_plans(p, SearchConfig(q + 1)).max_utility
        cases += 1
        failures += base.max_utility is not None and (nxt is None or nxt < base.max_utility)
    report(5, failures == 0 and cases >= 500, f"{cases} cases ({traces} executed schedules), {failures} failures")


def _structure_ok(p: Problem) -> bool:
    prog = emit_base_program(p, 2)
    text = prog.text(optimize=True)
    lines = text.splitlines()
    states = [ln for ln in lines if ln.startswith("state(") and ln.endswith(").") and ":-" not in ln]
    actions = [ln for ln in lines if ln.startswith("action(") and ":-" not in ln]
    conflicts = [ln for ln in lines if ln.startswith(":- inprog(") and "not pre" not in ln
                 or ln.startswith(":- executed(") and "S1<S2" in ln]
    return (
        states == ["state(0).", "state(1).", "state(2)."]
        and len(actions) == len(p.actions)
        and len(conflicts) == len(conflicting_actions(p.actions))
        and lines[-1] == "#maximize {U:utility(U)}."
        and "#maximize" not in prog.text(optimize=False)
        and emit_base_program(p, 2).text(optimize=True) == text
    )


def test_criterion_6_asp_structure(disaster):
    rng = random.Random(6)
    problems = [disaster] + [rand_problem(rng) for _ in range(50)]
    good = sum(_structure_ok(p) for p in problems)
    report(6, good == len(problems), f"{good}/{len(problems)} programs well-formed and byte-stable")


@pytest.mark.skipif(not os.environ.get("NPLAN_SOLVER"), reason="NPLAN_SOLVER not set")
def test_criterion_7_solver(disaster, tmp_path):
    program = tmp_path / "disaster.lp"
    program.write_text(emit_base_program(disaster, 13).text(optimize=True), encoding="utf-8")
    cmd = shlex.split(os.environ["NPLAN_SOLVER"]) + [str(program), "--opt-mode=optN", "20", "-V0"]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=600)
    # clingo binaries exit 10/20/30 (satisfiable, exhausted, both); the Python
    # module entry point exits 0
    answers = parse_answer_sets(proc.stdout, disaster)
    reported = [a.reported_utility for a in answers if a.reported_utility is not None]
    best = max(reported, default=None)
    optimal = [a for a in answers if a.reported_utility == best]
    checks = [cross_check(disaster, 13, a) for a in optimal]
    ok = (
        proc.returncode in (0, 10, 20, 30)
        and best == 43
        and bool(checks)
        and all(c.ok for c in checks)
    )
    report(7, ok, f"exit {proc.returncode}, best utility atom {best}, "
                  f"{sum(c.ok for c in checks)}/{len(checks)} optimal answer sets cross-check")

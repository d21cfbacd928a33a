"""Answer-set program emission and answer-set cross-checking.

The emitted text follows the clingo input dialect.  Problem identifiers are
lower-cased to become ASP constants; any names that collide after
lower-casing get numeric suffixes, and the table is written into the
program header so answer sets can be mapped back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import __version__
from .model import Problem
from .planner import NoGoalSatisfied, SearchConfig, evaluate_schedule
from .semantics import ExecutionError, Schedule, conflicting_actions

_RESERVED = {"not", "inf", "sup"}
_CONSTANT = re.compile(r"^[a-z][A-Za-z0-9_']*$")


class AspError(ValueError):
    pass


class Mangler:
    """Reversible name <-> ASP constant tables, one per identifier kind."""

    KINDS = ("fluent", "action", "goal", "norm")

    def __init__(self, p: Problem):
        self.forward: dict[str, dict[str, str]] = {}
        self.backward: dict[str, dict[str, str]] = {}
        names = {
            "fluent": sorted(p.fluents),
            "action": [a.name for a in p.actions],
            "goal": [g.name for g in p.goals],
            "norm": [n.name for n in p.norms],
        }
        for kind in self.KINDS:
            fwd, back = {}, {}
            originals = sorted(names[kind])
            # names already lower-case keep their spelling, others queue behind them
            for name in sorted(originals, key=lambda n: (n != n.lower(), n)):
                base = name.lower()
                if not _CONSTANT.match(base) or base in _RESERVED:
                    raise AspError(f"{kind} name {name!r} cannot be written as an ASP constant")
                const, i = base, 2
                while const in back:
                    const, i = f"{base}_{i}", i + 1
                fwd[name], back[const] = const, name
            self.forward[kind], self.backward[kind] = fwd, back

    def __call__(self, kind: str, name: str) -> str:
        return self.forward[kind][name]

    def unmangle(self, kind: str, const: str) -> str:
        try:
            return self.backward[kind][const]
        except KeyError:
            raise AspError(f"unknown {kind} {const!r}") from None

    def renamed(self) -> list[tuple[str, str, str]]:
        return [
            (kind, name, const)
            for kind in self.KINDS
            for name, const in sorted(self.forward[kind].items())
            if name != const
        ]


@dataclass
class AspProgram:
    base_rules: list[str]
    optimization_rules: list[str]
    horizon: int
    header: list[str] = field(default_factory=list)

    def text(self, optimize: bool = True) -> str:
        lines = self.header + self.base_rules
        if optimize and self.optimization_rules:
            lines = lines + self.optimization_rules
        return "\n".join(lines) + "\n"


def _ex(lits, m: Mangler, var: str = "S") -> list[str]:
    body = [f"holdsat({m('fluent', x)},{var})" for x in sorted(lits.pos)]
    body += [f"not holdsat({m('fluent', x)},{var})" for x in sorted(lits.neg)]
    return body


def _rule(head: str, body: list[str]) -> str:
    return f"{head} :- {', '.join(body)}." if body else f"{head}."


def emit_base_program(p: Problem, q: int, mangler: Mangler | None = None) -> AspProgram:
    if q < 1:
        raise AspError("horizon must be >= 1")
    m = mangler or Mangler(p)
    r: list[str] = []

    r.append("% states")
    r += [f"state({k})." for k in range(q + 1)]
    r.append("% initial state")
    r += [f"holdsat({m('fluent', x)},0)." for x in sorted(p.initial)]
    r.append("% inertia")
    r.append("holdsat(X,S2) :- holdsat(X,S1), not terminated(X,S1), state(S1), state(S2), S2=S1+1.")

    r.append("% actions and their preconditions")
    for a in p.actions:
        name = m("action", a.name)
        r.append(f"action({name},{a.duration}).")
        r.append(_rule(f"pre({name},S)", _ex(a.pre, m) + ["state(S)"]))

    r.append("% execution")
    r.append("{executed(A,S)} :- action(A,D), state(S).")
    r.append("inprog(A,S2) :- executed(A,S1), action(A,D), state(S1), state(S2), S1<=S2, S2<S1+D.")
    r.append(":- inprog(A,S), action(A,D), state(S), not pre(A,S).")
    r.append(":- executed(A1,S), executed(A2,S), A1!=A2, action(A1,D1), action(A2,D2), state(S).")
    r.append("% every run must finish within the horizon")
    r.append(f":- executed(A,S), action(A,D), state(S), S+D>{q}.")

    r.append("% postconditions")
    for a in p.actions:
        name = m("action", a.name)
        for x in sorted(a.post.pos):
            r.append(
                f"holdsat({m('fluent', x)},S2) :- executed({name},S1), action({name},{a.duration}), "
                f"state(S1), state(S2), S2=S1+{a.duration}."
            )
        for x in sorted(a.post.neg):
            r.append(
                f"terminated({m('fluent', x)},S2) :- executed({name},S1), action({name},{a.duration}), "
                f"state(S1), state(S2), S2=S1+{a.duration}-1."
            )

    r.append("% goals")
    for g in p.goals:
        name = m("goal", g.name)
        r.append(f"goal({name},{g.value}).")
        r.append(_rule(f"satisfied({name},S)", _ex(g.requirements, m) + ["state(S)"]))

    r.append("% norms")
    amap = p.action_map
    for n in p.norms:
        nn = m("norm", n.name)
        con, sub = m("action", n.condition), m("action", n.subject)
        dcon, dsub = amap[n.condition].duration, amap[n.subject].duration
        r.append(f"norm({nn},{n.cost}).")
        f = "o" if n.is_obligation else "f"
        inst = f"{f}({nn},S1,{sub},DL)"
        r.append(
            f"holdsat({f}({nn},S1,{sub},{n.deadline}+S2),S2) :- executed({con},S1), "
            f"action({con},{dcon}), S2=S1+{dcon}, state(S1), state(S2)."
        )
        if n.is_obligation:
            r.append(
                f"cmp({inst},S2) :- holdsat({inst},S2), executed({sub},S2), "
                f"action({sub},{dsub}), state(S1), state(S2), S2!=DL."
            )
            r.append(f"terminated({inst},S2) :- cmp({inst},S2), state(S1), state(S2).")
            r.append(f"vol({inst},S2) :- holdsat({inst},S2), DL=S2, state(S1), state(S2).")
            r.append(f"terminated({inst},S2) :- vol({inst},S2), state(S1), state(S2).")
        else:
            r.append(
                f"cmp({inst},S2) :- holdsat({inst},S2), action({sub},{dsub}), DL=S2, "
                f"state(S1), state(S2)."
            )
            r.append(f"terminated({inst},S2) :- cmp({inst},S2), state(S1), state(S2).")
            r.append(
                f"vol({inst},S2) :- holdsat({inst},S2), executed({sub},S2), "
                f"state(S1), state(S2), S2!=DL."
            )
            r.append(f"terminated({inst},S2) :- vol({inst},S2), state(S1), state(S2).")

    r.append("% plans satisfy at least one goal")
    for g in p.goals:
        name = m("goal", g.name)
        r.append(f"satisfied({name}) :- satisfied({name},S), state(S).")
    if p.goals:
        r.append(":- " + ", ".join(f"not satisfied({m('goal', g.name)})" for g in p.goals) + ".")
    else:
        r.append(":- #true.")

    r.append("% conflicting actions")
    for pair in sorted(conflicting_actions(p.actions), key=sorted):
        names = sorted(pair)
        if len(names) == 1:
            # two overlapping runs of the same action
            a = m("action", names[0])
            d = amap[names[0]].duration
            r.append(
                f":- executed({a},S1), executed({a},S2), action({a},{d}), "
                f"state(S1), state(S2), S1<S2, S2<S1+{d}."
            )
        else:
            a1, a2 = (m("action", x) for x in names)
            d1, d2 = (amap[x].duration for x in names)
            r.append(
                f":- inprog({a1},S), inprog({a2},S), action({a1},{d1}), action({a2},{d2}), state(S)."
            )

    header = [
        f"% problem: {p.name}",
        f"% horizon: {q}",
        f"% generator: normplan {__version__}",
    ]
    renamed = m.renamed()
    if renamed:
        header.append("% renamed identifiers:")
        header += [f"%   {kind} {name} = {const}" for kind, name, const in renamed]
    return AspProgram(r, emit_optimization(p), q, header)


def emit_optimization(p: Problem | None = None) -> list[str]:
    # goal and instance keys sit in the aggregate tuples so equal weights are not merged
    return [
        "% utility",
        "value(TV) :- TV = #sum {V,G: goal(G,V), satisfied(G)}.",
        "violated(N,S1) :- vol(o(N,S1,A,DL),S2), state(S1), state(S2).",
        "violated(N,S1) :- vol(f(N,S1,A,DL),S2), state(S1), state(S2).",
        "cost(TC) :- TC = #sum {C,N,S: violated(N,S), norm(N,C)}.",
        "utility(TV-TC) :- value(TV), cost(TC).",
        "#maximize {U:utility(U)}.",
    ]


# --- answer sets ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(-?\d+)|(\"(?:[^\"\\]|\\.)*\")|([a-z_][A-Za-z0-9_']*)|([(),]))")


def parse_term(text: str):
    """Parse one ground term; returns int, str, or (name, args) for functions."""
    pos = 0

    def next_tok():
        nonlocal pos
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise AspError(f"malformed atom {text!r}")
        pos = mt.end()
        return mt

    def term():
        nonlocal pos
        mt = next_tok()
        num, string, ident, punct = mt.groups()
        if num is not None:
            return int(num)
        if string is not None:
            return string
        if ident is None:
            raise AspError(f"malformed atom {text!r}")
        args = []
        save = pos
        look = _TOKEN.match(text, pos)
        if look and look.group(4) == "(":
            next_tok()
            while True:
                args.append(term())
                sep = next_tok().group(4)
                if sep == ")":
                    break
                if sep != ",":
                    raise AspError(f"malformed atom {text!r}")
        else:
            pos = save
        return (ident, tuple(args))

    out = term()
    if text[pos:].strip():
        raise AspError(f"malformed atom {text!r}")
    return out


@dataclass
class AnswerSet:
    atoms: frozenset[str]
    extracted_schedule: Schedule
    reported_utility: int | None = None


def parse_answer_set(text: str, p: Problem, mangler: Mangler | None = None) -> AnswerSet:
    m = mangler or Mangler(p)
    atoms = text.split()
    entries = []
    reported = None
    for atom in atoms:
        term = parse_term(atom)
        if not isinstance(term, tuple):
            raise AspError(f"malformed atom {atom!r}")
        name, args = term
        if name == "executed":
            if len(args) != 2 or not isinstance(args[0], tuple) or args[0][1] or not isinstance(args[1], int):
                raise AspError(f"malformed atom {atom!r}")
            entries.append((m.unmangle("action", args[0][0]), args[1]))
        elif name == "utility" and len(args) == 1:
            if not isinstance(args[0], int):
                raise AspError(f"malformed atom {atom!r}")
            reported = args[0]
    return AnswerSet(frozenset(atoms), Schedule(tuple(entries)), reported)


# ground atoms start lower-case; status lines and headers do not
_CHATTER = re.compile(r"^(?![a-z_])|^(clingo|pyclingo|gringo|clasp) version")


def parse_answer_sets(text: str, p: Problem) -> list[AnswerSet]:
    """Parse a file of models, one per line; solver status lines are skipped."""
    m = Mangler(p)
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or _CHATTER.match(line):
            continue
        out.append(parse_answer_set(line, p, m))
    return out


def schedule_atoms(s: Schedule, p: Problem) -> str:
    m = Mangler(p)
    return " ".join(f"executed({m('action', a)},{t})" for a, t in s)


@dataclass
class CheckReport:
    schedule: Schedule
    valid: bool
    error: str | None = None
    native_utility: int | None = None
    reported_utility: int | None = None

    @property
    def utilities_match(self) -> bool | None:
        if self.reported_utility is None or self.native_utility is None:
            return None
        return self.reported_utility == self.native_utility

    @property
    def ok(self) -> bool:
        return self.valid and self.utilities_match is not False

    def describe(self) -> str:
        if not self.valid:
            return f"invalid plan {self.schedule}: {self.error}"
        msg = f"valid plan {self.schedule}, utility {self.native_utility}"
        if self.utilities_match is False:
            msg += f"; utility mismatch: reported {self.reported_utility}"
        return msg

    def to_dict(self) -> dict:
        return {
            "schedule": [[a, t] for a, t in self.schedule],
            "valid": self.valid,
            "error": self.error,
            "native_utility": self.native_utility,
            "reported_utility": self.reported_utility,
            "utilities_match": self.utilities_match,
            "ok": self.ok,
        }


def cross_check(p: Problem, q: int, ans: AnswerSet, cfg: SearchConfig | None = None) -> CheckReport:
    cfg = cfg or SearchConfig(q)
    if cfg.horizon != q:
        cfg = SearchConfig(q, cfg.mode, cfg.pending_policy)
    try:
        rep = evaluate_schedule(p, ans.extracted_schedule, cfg)
    except (ExecutionError, NoGoalSatisfied) as exc:
        return CheckReport(ans.extracted_schedule, False, str(exc), None, ans.reported_utility)
    return CheckReport(ans.extracted_schedule, True, None, rep.utility, ans.reported_utility)

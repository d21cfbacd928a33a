"""Problem description types, the ``.nprp`` file format and structural checks.

A problem file is a YAML (or JSON) mapping with the keys ``fluents``,
``initial``, ``actions``, ``goals`` and ``norms``.  Literals are fluent
names, negated with a leading ``!``.  Since ``!x`` is YAML tag syntax, an
unquoted ``- !evacuated`` list item is accepted and read as a negated literal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import yaml

IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

OBLIGATION = "obligation"
PROHIBITION = "prohibition"
NORM_KINDS = (OBLIGATION, PROHIBITION)


class ProblemError(ValueError):
    """Raised when a problem document cannot be turned into a valid Problem."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ProblemSyntaxError(ProblemError):
    """The document could not be decoded at all."""


@dataclass(frozen=True, order=True)
class Literal:
    fluent: str
    positive: bool = True

    @classmethod
    def parse(cls, text: str) -> "Literal":
        text = text.strip()
        if text.startswith("!"):
            return cls(text[1:].strip(), False)
        return cls(text, True)

    def negate(self) -> "Literal":
        return Literal(self.fluent, not self.positive)

    def __str__(self) -> str:
        return self.fluent if self.positive else "!" + self.fluent


@dataclass(frozen=True)
class LiteralSet:
    """A set of literals; ``pos``/``neg`` are the fluents in each polarity."""

    members: frozenset[Literal] = frozenset()

    @classmethod
    def of(cls, items: Iterable[Literal | str] = ()) -> "LiteralSet":
        lits = [Literal.parse(i) if isinstance(i, str) else i for i in items]
        return cls(frozenset(lits))

    @property
    def pos(self) -> frozenset[str]:
        return frozenset(l.fluent for l in self.members if l.positive)

    @property
    def neg(self) -> frozenset[str]:
        return frozenset(l.fluent for l in self.members if not l.positive)

    @property
    def fluents(self) -> frozenset[str]:
        return frozenset(l.fluent for l in self.members)

    def contradictions(self) -> frozenset[str]:
        return self.pos & self.neg

    def is_well_defined(self) -> bool:
        return not self.contradictions()

    def holds_in(self, state: frozenset[str] | set[str]) -> bool:
        return self.pos <= state and not (self.neg & state)

    def sorted(self) -> list[Literal]:
        # positives first, then by name, so serialized files read naturally
        return sorted(self.members, key=lambda l: (not l.positive, l.fluent))

    def __iter__(self):
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DurativeAction:
    name: str
    pre: LiteralSet
    post: LiteralSet
    duration: int


@dataclass(frozen=True)
class Goal:
    name: str
    requirements: LiteralSet
    value: int


@dataclass(frozen=True)
class Norm:
    name: str
    kind: str
    condition: str
    subject: str
    deadline: int
    cost: int

    @property
    def is_obligation(self) -> bool:
        return self.kind == OBLIGATION


@dataclass(frozen=True)
class Problem:
    fluents: frozenset[str]
    initial: frozenset[str]
    actions: tuple[DurativeAction, ...]
    goals: tuple[Goal, ...] = ()
    norms: tuple[Norm, ...] = ()
    name: str = "problem"

    def __post_init__(self):
        # canonical order keeps equality and emitted text independent of file order
        object.__setattr__(self, "fluents", frozenset(self.fluents))
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "actions", tuple(sorted(self.actions, key=lambda a: a.name)))
        object.__setattr__(self, "goals", tuple(sorted(self.goals, key=lambda g: g.name)))
        object.__setattr__(self, "norms", tuple(sorted(self.norms, key=lambda n: n.name)))

    def action(self, name: str) -> DurativeAction:
        try:
            return self.action_map[name]
        except KeyError:
            raise KeyError(f"unknown action {name!r}") from None

    @property
    def action_map(self) -> dict[str, DurativeAction]:
        return {a.name: a for a in self.actions}

    @property
    def goal_map(self) -> dict[str, Goal]:
        return {g.name: g for g in self.goals}

    @property
    def norm_map(self) -> dict[str, Norm]:
        return {n.name: n for n in self.norms}

    def scaled(self, factor: int) -> "Problem":
        """Copy with every goal value and norm cost multiplied by ``factor``."""
        goals = [Goal(g.name, g.requirements, g.value * factor) for g in self.goals]
        norms = [
            Norm(n.name, n.kind, n.condition, n.subject, n.deadline, n.cost * factor)
            for n in self.norms
        ]
        return Problem(self.fluents, self.initial, self.actions, tuple(goals), tuple(norms), self.name)


@dataclass
class Finding:
    severity: str  # "error" | "warning"
    message: str
    where: str = ""

    def __str__(self) -> str:
        prefix = f"{self.where}: " if self.where else ""
        return f"{self.severity}: {prefix}{self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, message: str, where: str = "") -> None:
        self.findings.append(Finding("error", message, where))

    def warning(self, message: str, where: str = "") -> None:
        self.findings.append(Finding("warning", message, where))

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "errors": [{"where": f.where, "message": f.message} for f in self.errors],
            "warnings": [{"where": f.where, "message": f.message} for f in self.warnings],
        }


def _check_literals(report: ValidationReport, lits: LiteralSet, fluents: frozenset[str], where: str):
    for fl in sorted(lits.contradictions()):
        report.error(f"ill-defined literal set: {fl!r} appears both positively and negatively", where)
    for fl in sorted(lits.fluents - fluents):
        report.error(f"unknown fluent {fl!r}", where)


def validate_problem(p: Problem) -> ValidationReport:
    """Collect every structural error and the advisory warnings for ``p``."""
    report = ValidationReport()

    for fl in sorted(p.fluents):
        if not IDENTIFIER.match(fl):
            report.error(f"invalid fluent name {fl!r}", "fluents")
    for fl in sorted(p.initial - p.fluents):
        report.error(f"unknown fluent {fl!r}", "initial")

    if not p.actions:
        report.error("the action set must not be empty", "actions")
    seen: set[str] = set()
    for a in p.actions:
        where = f"actions.{a.name}"
        if not IDENTIFIER.match(a.name):
            report.error(f"invalid action name {a.name!r}", where)
        if a.name in seen:
            report.error(f"duplicate action name {a.name!r}", where)
        seen.add(a.name)
        if not isinstance(a.duration, int) or a.duration < 1:
            report.error(f"duration must be a positive integer, got {a.duration!r}", where)
        _check_literals(report, a.pre, p.fluents, where + ".pre")
        _check_literals(report, a.post, p.fluents, where + ".post")

    if not p.goals:
        report.warning("goal set is empty; no plan can exist", "goals")
    seen = set()
    for g in p.goals:
        where = f"goals.{g.name}"
        if not IDENTIFIER.match(g.name):
            report.error(f"invalid goal name {g.name!r}", where)
        if g.name in seen:
            report.error(f"duplicate goal name {g.name!r}", where)
        seen.add(g.name)
        if not isinstance(g.value, int) or g.value < 1:
            report.error(f"value must be a positive integer, got {g.value!r}", where)
        if not g.requirements.members:
            report.warning("goal has no requirements and is satisfied in every state", where)
        _check_literals(report, g.requirements, p.fluents, where + ".requirements")

    names = {a.name for a in p.actions}
    seen = set()
    for n in p.norms:
        where = f"norms.{n.name}"
        if not IDENTIFIER.match(n.name):
            report.error(f"invalid norm name {n.name!r}", where)
        if n.name in seen:
            report.error(f"duplicate norm name {n.name!r}", where)
        seen.add(n.name)
        if n.kind not in NORM_KINDS:
            report.error(f"kind must be one of {NORM_KINDS}, got {n.kind!r}", where)
        for role, act in (("condition", n.condition), ("subject", n.subject)):
            if act not in names:
                report.error(f"unknown {role} action {act!r}", where)
        if not isinstance(n.deadline, int) or n.deadline < 0:
            report.error(f"deadline must be a nonnegative integer, got {n.deadline!r}", where)
        elif n.deadline == 0:
            report.warning("deadline 0 gives an empty compliance window", where)
        if not isinstance(n.cost, int) or n.cost < 1:
            report.error(f"cost must be a positive integer, got {n.cost!r}", where)
        if n.condition == n.subject:
            report.warning("condition and subject are the same action", where)
    return report


# --- file format -----------------------------------------------------------


class _Loader(yaml.SafeLoader):
    pass


def _bang_literal(loader: yaml.SafeLoader, suffix: str, node: yaml.Node) -> str:
    # `- !evacuated` parses as an empty scalar tagged "!evacuated"
    if isinstance(node, yaml.ScalarNode) and node.value == "":
        return "!" + suffix
    raise yaml.constructor.ConstructorError(
        None, None, f"unexpected tag !{suffix}", node.start_mark
    )


_Loader.add_multi_constructor("!", _bang_literal)


_TOP_KEYS = ("fluents", "initial", "actions", "goals", "norms")


def _strict_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProblemError(f"expected an integer, got {value!r}", where)
    return value


def _names(value: Any, where: str) -> list[str]:
    if value is None:
        return []
    if not isinstance(value, list):
        raise ProblemError("expected a list", where)
    out = []
    for i, item in enumerate(value):
        if not isinstance(item, str) or not item.strip():
            raise ProblemError(f"expected a nonempty string, got {item!r}", f"{where}[{i}]")
        out.append(item.strip())
    return out


def _record(item: Any, where: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(item, dict):
        raise ProblemError("expected a mapping", where)
    missing = [k for k in required if k not in item]
    if missing:
        raise ProblemError(f"missing field(s) {', '.join(missing)}", where)
    extra = sorted(set(item) - set(required) - set(optional))
    if extra:
        raise ProblemError(f"unknown field(s) {', '.join(map(str, extra))}", where)
    return item


def _literal_set(value: Any, where: str) -> LiteralSet:
    return LiteralSet.of(_names(value, where))


def problem_from_dict(doc: Any, name: str = "problem", strict: bool = True) -> Problem:
    """Build a Problem from a decoded document.

    With ``strict`` the result must pass validate_problem; otherwise only the
    document shape is checked and the caller is expected to validate.
    """
    if not isinstance(doc, dict):
        raise ProblemSyntaxError("problem document must be a mapping")
    extra = sorted(set(doc) - set(_TOP_KEYS) - {"name"})
    if extra:
        raise ProblemError(f"unknown top-level key(s) {', '.join(map(str, extra))}")
    for key in ("fluents", "actions"):
        if key not in doc:
            raise ProblemError(f"missing top-level key {key!r}")

    fluents = _names(doc.get("fluents"), "fluents")
    dup = sorted({f for f in fluents if fluents.count(f) > 1})
    if dup:
        raise ProblemError(f"duplicate fluent name(s) {', '.join(dup)}", "fluents")
    initial = _names(doc.get("initial"), "initial")

    actions = []
    for i, item in enumerate(doc.get("actions") or []):
        where = f"actions[{i}]"
        rec = _record(item, where, ("name", "duration"), ("pre", "post"))
        actions.append(
            DurativeAction(
                name=str(rec["name"]),
                pre=_literal_set(rec.get("pre"), where + ".pre"),
                post=_literal_set(rec.get("post"), where + ".post"),
                duration=_strict_int(rec["duration"], where + ".duration"),
            )
        )
    goals = []
    for i, item in enumerate(doc.get("goals") or []):
        where = f"goals[{i}]"
        rec = _record(item, where, ("name", "value"), ("requirements",))
        goals.append(
            Goal(
                name=str(rec["name"]),
                requirements=_literal_set(rec.get("requirements"), where + ".requirements"),
                value=_strict_int(rec["value"], where + ".value"),
            )
        )
    norms = []
    for i, item in enumerate(doc.get("norms") or []):
        where = f"norms[{i}]"
        rec = _record(item, where, ("name", "kind", "condition", "subject", "deadline", "cost"))
        norms.append(
            Norm(
                name=str(rec["name"]),
                kind=str(rec["kind"]).lower(),
                condition=str(rec["condition"]),
                subject=str(rec["subject"]),
                deadline=_strict_int(rec["deadline"], where + ".deadline"),
                cost=_strict_int(rec["cost"], where + ".cost"),
            )
        )

    problem = Problem(
        frozenset(fluents), frozenset(initial), tuple(actions), tuple(goals), tuple(norms),
        name=str(doc.get("name", name)),
    )
    if not strict:
        return problem
    report = validate_problem(problem)
    if report.errors:
        first = report.errors[0]
        raise ProblemError(first.message, first.where or None)
    return problem


def parse_problem(text: str, name: str = "problem", strict: bool = True) -> Problem:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}, column {mark.column + 1}" if mark else None
        reason = getattr(exc, "problem", None) or str(exc)
        raise ProblemSyntaxError(f"syntax error: {reason}", loc) from exc
    return problem_from_dict(doc, name=name, strict=strict)


def load_problem(path: str | Path, strict: bool = True) -> Problem:
    path = Path(path)
    return parse_problem(path.read_text(encoding="utf-8"), name=path.stem, strict=strict)


def problem_to_dict(p: Problem) -> dict[str, Any]:
    return {
        "name": p.name,
        "fluents": sorted(p.fluents),
        "initial": sorted(p.initial),
        "actions": [
            {
                "name": a.name,
                "duration": a.duration,
                "pre": [str(l) for l in a.pre],
                "post": [str(l) for l in a.post],
            }
            for a in p.actions
        ],
        "goals": [
            {"name": g.name, "value": g.value, "requirements": [str(l) for l in g.requirements]}
            for g in p.goals
        ],
        "norms": [
            {
                "name": n.name,
                "kind": n.kind,
                "condition": n.condition,
                "subject": n.subject,
                "deadline": n.deadline,
                "cost": n.cost,
            }
            for n in p.norms
        ],
    }


def serialize_problem(p: Problem) -> str:
    # quoting every string keeps "!x" literals out of tag syntax
    return yaml.dump(
        problem_to_dict(p), sort_keys=False, default_flow_style=False, default_style=None,
        Dumper=_QuotingDumper, allow_unicode=True,
    )


class _QuotingDumper(yaml.SafeDumper):
    pass


_QuotingDumper.add_representer(
    str, lambda dumper, data: dumper.represent_scalar("tag:yaml.org,2002:str", data, style='"')
)

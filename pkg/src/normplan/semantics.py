"""Execution semantics: state traces, goal satisfaction and the norm lifecycle.

Everything here is a pure function of a Problem and a Schedule.  The planner
re-implements the same rules incrementally; tests compare the two.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .model import DurativeAction, Norm, Problem

Entry = tuple[str, int]


class ComplianceMode(str, enum.Enum):
    """When a subject action counts as occurring inside a compliance window."""

    START = "start"  # the subject starts inside the window
    START_END = "start-end"  # the subject starts and ends inside it


class PendingPolicy(str, enum.Enum):
    IGNORE = "ignore"
    VIOLATE = "violate"
    COMPLY = "comply"


class Status(str, enum.Enum):
    COMPLIED = "complied"
    VIOLATED = "violated"
    PENDING = "pending"


class ExecutionError(Exception):
    """A schedule that cannot be executed as a plan."""


class SameStart(ExecutionError):
    def __init__(self, a: str, b: str, t: int):
        self.actions, self.time = (a, b), t
        super().__init__(f"SameStart: {a} and {b} both start at {t}")


class ConflictOverlap(ExecutionError):
    def __init__(self, a: str, b: str, k: int):
        self.actions, self.time = (a, b), k
        super().__init__(f"ConflictOverlap: {a} and {b} are both in progress at {k}")


class PreconditionFailure(ExecutionError):
    def __init__(self, action: str, start: int, k: int):
        self.action, self.start, self.time = action, start, k
        super().__init__(f"PreconditionFailure: {action} (started {start}) at {k}")


class HorizonExceeded(ExecutionError):
    def __init__(self, horizon: int, makespan: int):
        self.horizon, self.makespan = horizon, makespan
        super().__init__(f"HorizonExceeded: makespan {makespan} > horizon {horizon}")


class UnknownAction(ExecutionError, KeyError):
    def __init__(self, name: str):
        self.name = name
        ExecutionError.__init__(self, f"unknown action {name!r}")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class Schedule:
    """Timed action starts, kept sorted by (start, action)."""

    entries: tuple[Entry, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(((str(a), int(t)) for a, t in self.entries), key=lambda e: (e[1], e[0])))
        object.__setattr__(self, "entries", ordered)

    @classmethod
    def of(cls, *entries: Entry) -> "Schedule":
        return cls(tuple(entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, entry: object) -> bool:
        return entry in self.entries

    def starts_of(self, action: str) -> list[int]:
        return [t for a, t in self.entries if a == action]

    def action_at(self, t: int) -> str | None:
        for a, s in self.entries:
            if s == t:
                return a
        return None

    def __str__(self) -> str:
        return "<" + ", ".join(f"({a},{t})" for a, t in self.entries) + ">"


@dataclass(frozen=True)
class Trace:
    states: tuple[frozenset[str], ...]
    ending_at: dict[int, tuple[Entry, ...]] = field(compare=False)
    in_progress_at: dict[int, tuple[Entry, ...]] = field(compare=False)

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def added(self, k: int) -> frozenset[str]:
        return self.states[k] - self.states[k - 1] if k else frozenset()

    def removed(self, k: int) -> frozenset[str]:
        return self.states[k - 1] - self.states[k] if k else frozenset()


@dataclass(frozen=True)
class NormInstance:
    norm: Norm
    activation_time: int
    activation_end: int
    status: Status = Status.PENDING
    at: int | None = None

    @property
    def deadline_abs(self) -> int:
        return self.norm.deadline + self.activation_end

    @property
    def key(self) -> tuple[str, int]:
        return (self.norm.name, self.activation_time)

    def resolved(self, status: Status, at: int | None) -> "NormInstance":
        return NormInstance(self.norm, self.activation_time, self.activation_end, status, at)

    def describe(self) -> str:
        head = f"{self.norm.name}@{self.activation_time} ({self.norm.kind} {self.norm.subject}, window [{self.activation_end},{self.deadline_abs}))"
        if self.status is Status.PENDING:
            return head + " pending"
        return f"{head} {self.status.value} at {self.at}"


def conflicting_actions(actions: Iterable[DurativeAction]) -> frozenset[frozenset[str]]:
    """Unordered pairs of actions that may not be in progress together.

    A pair ``{a}`` of size one means two overlapping runs of ``a`` conflict.
    """
    acts = list(actions)
    pairs = set()
    for i, a in enumerate(acts):
        a_pos = a.pre.pos | a.post.pos
        a_neg = a.pre.neg | a.post.neg
        for b in acts[i:]:
            b_pos = b.pre.pos | b.post.pos
            b_neg = b.pre.neg | b.post.neg
            if (a_pos & b_neg) or (a_neg & b_pos):
                pairs.add(frozenset((a.name, b.name)))
    return frozenset(pairs)


def makespan(s: Schedule, actions: Iterable[DurativeAction] | dict[str, DurativeAction]) -> int:
    amap = actions if isinstance(actions, dict) else {a.name: a for a in actions}
    end = 0
    for name, t in s:
        if name not in amap:
            raise UnknownAction(name)
        end = max(end, t + amap[name].duration)
    return end


def simulate(p: Problem, s: Schedule, horizon: int, conflicts: frozenset | None = None) -> Trace:
    """Run ``s`` from the initial state and return states 0..horizon.

    Raises an ExecutionError subclass if ``s`` is not executable.
    """
    amap = p.action_map
    m = makespan(s, amap)
    for (a, t), (b, u) in zip(s.entries, s.entries[1:]):
        if t == u:
            raise SameStart(a, b, t)
    if any(t < 0 for _, t in s):
        raise ExecutionError("negative start time")
    if horizon < m:
        raise HorizonExceeded(horizon, m)

    cf = conflicting_actions(p.actions) if conflicts is None else conflicts
    spans = [(a, t, t + amap[a].duration) for a, t in s]
    for (a, t, e), (b, u, f) in combinations(spans, 2):
        if frozenset((a, b)) in cf and t < f and u < e:
            raise ConflictOverlap(a, b, max(t, u))

    ending: dict[int, list[Entry]] = {}
    progress: dict[int, list[Entry]] = {}
    for a, t, e in spans:
        ending.setdefault(e, []).append((a, t))
        for k in range(t, e):
            progress.setdefault(k, []).append((a, t))

    states = [frozenset(p.initial)]
    for k in range(1, horizon + 1):
        ends = ending.get(k, [])
        if not ends:
            states.append(states[-1])
            continue
        dels = set().union(*(amap[a].post.neg for a, _ in ends))
        adds = set().union(*(amap[a].post.pos for a, _ in ends))
        states.append(frozenset((states[-1] - dels) | adds))

    for a, t, e in spans:
        pre = amap[a].pre
        for k in range(t, e):
            if not pre.holds_in(states[k]):
                raise PreconditionFailure(a, t, k)

    return Trace(
        tuple(states),
        {k: tuple(v) for k, v in ending.items()},
        {k: tuple(v) for k, v in progress.items()},
    )


def satisfied_goals(t: Trace, goals) -> frozenset[str]:
    return frozenset(
        g.name for g in goals if any(g.requirements.holds_in(st) for st in t.states)
    )


def instantiate_norms(p: Problem, s: Schedule) -> tuple[NormInstance, ...]:
    amap = p.action_map
    out = []
    for n in p.norms:
        d = amap[n.condition].duration
        for t in s.starts_of(n.condition):
            out.append(NormInstance(n, t, t + d))
    return tuple(sorted(out, key=lambda i: (i.activation_time, i.norm.name)))


def in_window(start: int, duration: int, window_start: int, deadline: int, mode: ComplianceMode) -> bool:
    """Does a subject run beginning at ``start`` count for the window [window_start, deadline)?"""
    if mode is ComplianceMode.START:
        return window_start <= start < deadline
    # closed run [start, start+duration] inside the half-open window
    return window_start <= start and start + duration < deadline


def resolve_norms(
    p: Problem,
    s: Schedule,
    instances: Iterable[NormInstance],
    mode: ComplianceMode = ComplianceMode.START,
    horizon: int | None = None,
) -> tuple[NormInstance, ...]:
    amap = p.action_map
    q = makespan(s, amap) if horizon is None else horizon
    out = []
    for inst in instances:
        n = inst.norm
        d_sub = amap[n.subject].duration
        hits = [
            t for t in s.starts_of(n.subject)
            if in_window(t, d_sub, inst.activation_end, inst.deadline_abs, mode)
        ]
        first = min(hits) if hits else None
        if n.is_obligation:
            if first is not None:
                inst = inst.resolved(Status.COMPLIED, first)
            elif inst.deadline_abs <= q:
                inst = inst.resolved(Status.VIOLATED, inst.deadline_abs)
        else:
            if first is not None:
                inst = inst.resolved(Status.VIOLATED, first)
            elif inst.deadline_abs <= q:
                inst = inst.resolved(Status.COMPLIED, inst.deadline_abs)
        out.append(inst)
    return tuple(out)


def utility(
    p: Problem,
    satisfied: Iterable[str],
    resolved: Iterable[NormInstance],
    pending_policy: PendingPolicy = PendingPolicy.IGNORE,
) -> int:
    gmap = p.goal_map
    total = sum(gmap[g].value for g in set(satisfied))
    for inst in resolved:
        if inst.status is Status.VIOLATED or (
            inst.status is Status.PENDING and pending_policy is PendingPolicy.VIOLATE
        ):
            total -= inst.norm.cost
    return total

"""Plan enumeration and utility-optimal search.

The search walks time points 0..q choosing at most one action start per
point.  A search node is everything the future depends on: the time, the
current state, the runs still in progress, the live norm instances and the
goals satisfied so far.  Nodes are memoised with the best utility still
obtainable below them, which makes both the optimum and the Opt set cheap
to extract even when the raw schedule space is astronomically large.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .model import Problem
from .semantics import (
    ComplianceMode,
    ExecutionError,
    NormInstance,
    PendingPolicy,
    Schedule,
    Status,
    conflicting_actions,
    in_window,
    instantiate_norms,
    makespan,
    resolve_norms,
    satisfied_goals,
    simulate,
    utility,
)

NAIVE_LIMIT = 10**7


class BudgetExhausted(RuntimeError):
    pass


class NoGoalSatisfied(ExecutionError):
    def __init__(self):
        super().__init__("NoGoalSatisfied: the schedule satisfies no goal")


@dataclass(frozen=True)
class SearchConfig:
    horizon: int
    mode: ComplianceMode = ComplianceMode.START
    pending_policy: PendingPolicy = PendingPolicy.IGNORE
    max_plans: int | None = None
    time_budget: float | None = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        object.__setattr__(self, "mode", ComplianceMode(self.mode))
        object.__setattr__(self, "pending_policy", PendingPolicy(self.pending_policy))


@dataclass(frozen=True)
class PlanReport:
    schedule: Schedule
    satisfied: frozenset[str]
    complied: tuple[NormInstance, ...]
    violated: tuple[NormInstance, ...]
    pending: tuple[NormInstance, ...]
    utility: int
    makespan: int

    @property
    def instances(self) -> tuple[NormInstance, ...]:
        return tuple(sorted(self.complied + self.violated + self.pending,
                            key=lambda i: (i.activation_time, i.norm.name)))

    def to_dict(self) -> dict:
        def inst(i: NormInstance) -> dict:
            return {
                "norm": i.norm.name,
                "kind": i.norm.kind,
                "activated": i.activation_time,
                "window": [i.activation_end, i.deadline_abs],
                "status": i.status.value,
                "at": i.at,
                "cost": i.norm.cost,
            }

        return {
            "schedule": [[a, t] for a, t in self.schedule],
            "makespan": self.makespan,
            "satisfied": sorted(self.satisfied),
            "complied": [inst(i) for i in self.complied],
            "violated": [inst(i) for i in self.violated],
            "pending": [inst(i) for i in self.pending],
            "utility": self.utility,
        }


def evaluate_schedule(p: Problem, s: Schedule, cfg: SearchConfig) -> PlanReport:
    """Check ``s`` against the plan definition and score it.

    Raises ExecutionError (or NoGoalSatisfied) when ``s`` is not a plan.
    """
    trace = simulate(p, s, cfg.horizon)
    sat = satisfied_goals(trace, p.goals)
    if not sat:
        raise NoGoalSatisfied()
    resolved = resolve_norms(p, s, instantiate_norms(p, s), cfg.mode, cfg.horizon)
    by = {st: tuple(i for i in resolved if i.status is st) for st in Status}
    return PlanReport(
        schedule=s,
        satisfied=sat,
        complied=by[Status.COMPLIED],
        violated=by[Status.VIOLATED],
        pending=by[Status.PENDING],
        utility=utility(p, sat, resolved, cfg.pending_policy),
        makespan=makespan(s, p.action_map),
    )


# --- incremental search -----------------------------------------------------

# live instance: (norm name, activation time, window start, deadline)
Live = tuple[str, int, int, int]


@dataclass(frozen=True)
class _Node:
    t: int
    state: frozenset
    running: tuple  # (action, start, end), end > t
    live: tuple  # Live, sorted
    sat: frozenset

    @property
    def key(self):
        return (self.t, self.state, self.running, self.live, self.sat)


class _Search:
    def __init__(self, p: Problem, cfg: SearchConfig):
        self.p, self.cfg, self.q = p, cfg, cfg.horizon
        self.actions = p.actions
        self.amap = p.action_map
        self.nmap = p.norm_map
        self.cf = conflicting_actions(p.actions)
        self.goal_value = {g.name: g.value for g in p.goals}
        self.total_value = sum(self.goal_value.values())
        self.by_condition: dict[str, list] = {}
        for n in p.norms:
            self.by_condition.setdefault(n.condition, []).append(n)
        self.best_memo: dict = {}
        self.set_memo: dict = {}
        self.deadline = None if cfg.time_budget is None else time.monotonic() + cfg.time_budget
        self._ticks = 0
        self.incumbent: tuple[int, tuple] | None = None

    def tick(self):
        self._ticks += 1
        if self.deadline is not None and self._ticks % 256 == 0 and time.monotonic() > self.deadline:
            raise BudgetExhausted()

    def _satisfied(self, state, sat):
        new = [g.name for g in self.p.goals if g.name not in sat and g.requirements.holds_in(state)]
        return sat | frozenset(new) if new else sat

    def root(self) -> _Node | None:
        # goals already true in the initial state are credited by the first step
        return _Node(0, frozenset(self.p.initial), (), (), frozenset())

    def choices(self, node: _Node) -> list[str | None]:
        out: list[str | None] = []
        t = node.t
        for a in self.actions:
            if t + a.duration > self.q or not a.pre.holds_in(node.state):
                continue
            if any(frozenset((a.name, r[0])) in self.cf for r in node.running):
                continue
            out.append(a.name)
        out.append(None)
        return out

    def step(self, node: _Node, choice: str | None):
        """Apply ``choice`` at ``node.t``; return (cost, child) or None if the branch dies."""
        t, mode = node.t, self.cfg.mode
        sat = node.sat if t else self._satisfied(node.state, node.sat)
        cost = 0
        live = []
        running = list(node.running)
        if choice is not None:
            d = self.amap[choice].duration
            running.append((choice, t, t + d))
        for inst in node.live:
            norm = self.nmap[inst[0]]
            ws, dl = inst[2], inst[3]
            if choice == norm.subject and in_window(t, self.amap[choice].duration, ws, dl, mode):
                if not norm.is_obligation:
                    cost += norm.cost
            elif dl == t:
                if norm.is_obligation:
                    cost += norm.cost
            else:
                live.append(inst)
        if choice is not None:
            d = self.amap[choice].duration
            for n in self.by_condition.get(choice, ()):
                live.append((n.name, t, t + d, t + d + n.deadline))
        live.sort()

        if t == self.q:
            return cost, _Node(t + 1, node.state, (), tuple(live), sat)

        nt = t + 1
        ends = [r for r in running if r[2] == nt]
        state = node.state
        if ends:
            dels = set().union(*(self.amap[r[0]].post.neg for r in ends))
            adds = set().union(*(self.amap[r[0]].post.pos for r in ends))
            state = frozenset((state - dels) | adds)
        still = tuple(sorted(r for r in running if r[2] > nt))
        for r in still:
            if not self.amap[r[0]].pre.holds_in(state):
                return None
        return cost, _Node(nt, state, still, tuple(live), self._satisfied(state, sat))

    def leaf_value(self, node: _Node) -> int | None:
        if not node.sat:
            return None
        if self.cfg.pending_policy is PendingPolicy.VIOLATE:
            return -sum(self.nmap[i[0]].cost for i in node.live)
        return 0

    def gain(self, parent: _Node, child: _Node) -> int:
        return sum(self.goal_value[g] for g in child.sat - parent.sat)

    def upper_bound(self, node: _Node) -> int:
        """Admissible bound on the future utility below ``node``."""
        return self.total_value - sum(self.goal_value[g] for g in node.sat)

    def expand(self, node: _Node):
        for choice in self.choices(node):
            res = self.step(node, choice)
            if res is not None:
                cost, child = res
                yield choice, self.gain(node, child) - cost, child

    def best(self, node: _Node, path: tuple = (), prefix: int = 0) -> int | None:
        """Exact maximum future utility below ``node`` (None when no plan extends it)."""
        if node.t > self.q:
            v = self.leaf_value(node)
            if v is not None and (self.incumbent is None or prefix + v > self.incumbent[0]):
                self.incumbent = (prefix + v, path)
            return v
        key = node.key
        if key in self.best_memo:
            return self.best_memo[key]
        self.tick()
        top = None
        for choice, delta, child in self.expand(node):
            # children that cannot beat the local best leave the maximum unchanged
            if top is not None and delta + self.upper_bound(child) <= top:
                continue
            sub = self.best(child, path + ((choice, node.t),) if choice else path, prefix + delta)
            if sub is not None and (top is None or delta + sub > top):
                top = delta + sub
        self.best_memo[key] = top
        return top

    def reachable(self, node: _Node) -> frozenset[int]:
        """Every future utility obtainable below ``node``."""
        if node.t > self.q:
            v = self.leaf_value(node)
            return frozenset() if v is None else frozenset((v,))
        key = node.key
        if key in self.set_memo:
            return self.set_memo[key]
        self.tick()
        out: set[int] = set()
        for _, delta, child in self.expand(node):
            out.update(delta + x for x in self.reachable(child))
        res = frozenset(out)
        self.set_memo[key] = res
        return res

    def walk(self, node: _Node, want: Callable[[_Node, int], bool], path: tuple = (), prefix: int = 0):
        """Yield (schedule entries, utility) for every plan below ``node`` that ``want`` admits.

        ``want(child, prefix)`` decides whether a subtree can hold a wanted plan.
        """
        if node.t > self.q:
            v = self.leaf_value(node)
            if v is not None:
                yield path, prefix + v
            return
        self.tick()
        for choice, delta, child in self.expand(node):
            if want(child, prefix + delta):
                yield from self.walk(child, want, path + ((choice, node.t),) if choice else path, prefix + delta)


def _report(p: Problem, cfg: SearchConfig, entries, expected: int) -> PlanReport:
    rep = evaluate_schedule(p, Schedule(tuple(entries)), cfg)
    if rep.utility != expected:
        raise AssertionError(
            f"search utility {expected} disagrees with evaluation {rep.utility} for {rep.schedule}"
        )
    return rep


class PlanStream:
    """Iterable of PlanReports; ``truncated``/``reason`` are set once iteration stops early."""

    def __init__(self, p: Problem, cfg: SearchConfig, min_utility: int | None = None):
        self.p, self.cfg, self.min_utility = p, cfg, min_utility
        self.truncated = False
        self.reason: str | None = None
        self.count = 0

    def __iter__(self) -> Iterator[PlanReport]:
        p, cfg = self.p, self.cfg
        search = _Search(p, cfg)
        floor = self.min_utility

        def want(child: _Node, prefix: int) -> bool:
            b = search.best(child)
            if b is None:
                return False
            return floor is None or prefix + b >= floor

        root = search.root()
        try:
            if search.best(root) is None:
                return
            for entries, u in search.walk(root, want):
                if cfg.max_plans is not None and self.count >= cfg.max_plans:
                    self.truncated, self.reason = True, "max_plans"
                    return
                self.count += 1
                yield _report(p, cfg, entries, u)
        except BudgetExhausted:
            self.truncated, self.reason = True, "time_budget"


def enumerate_plans(p: Problem, cfg: SearchConfig, min_utility: int | None = None) -> PlanStream:
    return PlanStream(p, cfg, min_utility)


def enumerate_naive(p: Problem, cfg: SearchConfig) -> set[PlanReport]:
    """Brute force: try every assignment of at most one start per time point."""
    q = cfg.horizon
    names = [a.name for a in p.actions]
    if (len(names) + 1) ** q > NAIVE_LIMIT:
        raise ValueError(f"naive enumeration too large: ({len(names)}+1)^{q} > {NAIVE_LIMIT}")
    plans = set()
    # a start at time q can never finish by q, so slots 0..q-1 suffice
    for combo in itertools.product([None, *names], repeat=q):
        s = Schedule(tuple((a, t) for t, a in enumerate(combo) if a is not None))
        try:
            plans.add(evaluate_schedule(p, s, cfg))
        except ExecutionError:
            continue
    return plans


@dataclass(frozen=True)
class OptimalResult:
    max_utility: int | None
    plans: tuple[PlanReport, ...]
    certified: bool = True
    truncated: bool = False

    def __iter__(self):
        # allows `best, plans = optimal_plans(...)`
        return iter((self.max_utility, self.plans))


def optimal_plans(p: Problem, cfg: SearchConfig, prune: bool = True) -> OptimalResult:
    """All plans of maximum utility.

    With ``prune`` the search memoises node values and cuts subtrees with the
    admissible goal-value bound; without it every plan is enumerated.
    """
    search = _Search(p, cfg)
    root = search.root()
    plans: list[PlanReport] = []
    cap = cfg.max_plans

    if not prune:
        best, found = None, []
        try:
            for entries, u in search.walk(root, lambda c, pre: True):
                if best is None or u > best:
                    best, found = u, [entries]
                elif u == best:
                    found.append(entries)
        except BudgetExhausted:
            return _uncertified(p, cfg, best, found)
        reports = sorted((_report(p, cfg, e, best) for e in found), key=lambda r: r.schedule.entries)
        truncated = cap is not None and len(reports) > cap
        return OptimalResult(best, tuple(reports[:cap] if cap is not None else reports), True, truncated)

    try:
        best = search.best(root)
        if best is None:
            return OptimalResult(None, ())

        def want(child: _Node, prefix: int) -> bool:
            need = best - prefix
            if search.upper_bound(child) < need:
                return False
            b = search.best(child)
            return b is not None and b == need

        truncated = False
        for entries, u in search.walk(root, want):
            if cap is not None and len(plans) >= cap:
                truncated = True
                break
            plans.append(_report(p, cfg, entries, u))
    except BudgetExhausted:
        if plans:
            return OptimalResult(plans[0].utility, tuple(plans), False, True)
        inc = search.incumbent
        return _uncertified(p, cfg, inc[0] if inc else None, [inc[1]] if inc else [])
    return OptimalResult(best, tuple(plans), True, truncated)


def _uncertified(p, cfg, best, found) -> OptimalResult:
    reports = tuple(_report(p, cfg, e, best) for e in found)
    return OptimalResult(best, reports, False, True)


def achievable_utilities(p: Problem, cfg: SearchConfig) -> frozenset[int]:
    """The set of utilities over all plans within the horizon."""
    search = _Search(p, cfg)
    return search.reachable(search.root())

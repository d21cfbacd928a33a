"""Human-readable timelines, CSV export and timeline figures for plans."""

from __future__ import annotations

import csv
import io
from pathlib import Path

from .model import Problem
from .planner import PlanReport
from .semantics import Status, Trace, simulate


def _first_satisfied(p: Problem, trace: Trace) -> dict[str, int]:
    first = {}
    for g in p.goals:
        for k, st in enumerate(trace.states):
            if g.requirements.holds_in(st):
                first[g.name] = k
                break
    return first


def render_timeline(p: Problem, plan: PlanReport, horizon: int, index: int | None = None) -> str:
    """One row per time point: starts, runs in progress, fluent changes and events.

    Added fluents are prefixed ``+`` and terminated ones ``-``; ``VIOLATED``
    and ``GOAL`` mark norm violations and first goal satisfaction.
    """
    trace = simulate(p, plan.schedule, horizon)
    first = _first_satisfied(p, trace)
    title = f"plan {index}" if index is not None else "plan"
    lines = [f"{title}: utility {plan.utility}, makespan {plan.makespan}"]
    amap = p.action_map
    runs = ", ".join(f"{a}[{t},{t + amap[a].duration})" for a, t in plan.schedule)
    lines.append(f"  schedule: {runs or '(empty)'}")

    events: dict[int, list[str]] = {}
    for inst in plan.instances:
        if inst.status is Status.VIOLATED:
            events.setdefault(inst.at, []).append(f"VIOLATED {inst.norm.name}@{inst.activation_time} (-{inst.norm.cost})")
        elif inst.status is Status.COMPLIED:
            events.setdefault(inst.at, []).append(f"complied {inst.norm.name}@{inst.activation_time}")
    for g, k in first.items():
        events.setdefault(k, []).append(f"GOAL {g} (+{p.goal_map[g].value})")

    for k in range(horizon + 1):
        start = plan.schedule.action_at(k) or ""
        running = ",".join(a for a, t in trace.in_progress_at.get(k, ()) if t != k)
        changes = [f"+{x}" for x in sorted(trace.added(k))] + [f"-{x}" for x in sorted(trace.removed(k))]
        if k == 0:
            changes = [f"+{x}" for x in sorted(trace.states[0])]
        row = f"  {k:>3} | {start:<14} | {running:<22} | {' '.join(changes):<30} | {'; '.join(events.get(k, []))}"
        lines.append(row.rstrip())

    lines.append(f"  satisfied: {', '.join(sorted(plan.satisfied)) or '-'}")
    for inst in plan.instances:
        lines.append(f"  norm {inst.describe()}")
    return "\n".join(lines)


def plans_csv(plans: list[PlanReport], p: Problem) -> str:
    """One row per scheduled run; plans without runs get a single blank row."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["plan", "utility", "satisfied", "violated", "action", "start", "end"])
    amap = p.action_map
    for i, plan in enumerate(plans, 1):
        sat = ";".join(sorted(plan.satisfied))
        vol = ";".join(f"{v.norm.name}@{v.activation_time}" for v in plan.violated)
        if not plan.schedule.entries:
            w.writerow([i, plan.utility, sat, vol, "", "", ""])
        for a, t in plan.schedule:
            w.writerow([i, plan.utility, sat, vol, a, t, t + amap[a].duration])
    return buf.getvalue()


def plot_timeline(p: Problem, plan: PlanReport, horizon: int, path: str | Path, title: str | None = None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    trace = simulate(p, plan.schedule, horizon)
    amap = p.action_map
    entries = list(plan.schedule)
    rows = len(entries) + len(plan.instances)
    fig, ax = plt.subplots(figsize=(max(6, horizon * 0.6 + 3), 1.2 + 0.45 * max(rows, 1)))

    labels = []
    for y, (a, t) in enumerate(entries):
        ax.barh(y, amap[a].duration, left=t, height=0.6, color="#4c72b0")
        labels.append(f"{a}@{t}")
    colors = {Status.VIOLATED: "#c44e52", Status.COMPLIED: "#55a868", Status.PENDING: "#999999"}
    for j, inst in enumerate(plan.instances):
        y = len(entries) + j
        width = max(inst.deadline_abs - inst.activation_end, 0.08)
        ax.barh(y, width, left=inst.activation_end, height=0.4, color=colors[inst.status], alpha=0.7)
        if inst.at is not None:
            ax.plot([inst.at], [y], marker="x", color="black")
        labels.append(f"{inst.norm.name}@{inst.activation_time} {inst.status.value}")

    for g, k in _first_satisfied(p, trace).items():
        ax.axvline(k, color="#55a868", linestyle="--", linewidth=1)
        ax.text(k, -0.9, g, rotation=0, fontsize=7, color="#2d6a3e", ha="center")

    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=8)
    ax.set_xlim(0, horizon)
    ax.set_ylim(-1.3, max(rows, 1) - 0.4)
    ax.invert_yaxis()
    ax.set_xticks(range(horizon + 1))
    ax.set_xlabel("time")
    ax.set_title(title or f"utility {plan.utility}", fontsize=10)
    ax.grid(axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def write_report(p: Problem, plans: list[PlanReport], horizon: int, outdir: str | Path, figures: int = 10) -> list[Path]:
    """Write ``plans.csv`` plus up to ``figures`` timeline PNGs into ``outdir``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "plans.csv"]
    written[0].write_text(plans_csv(plans, p), encoding="utf-8")
    for i, plan in enumerate(plans[:figures], 1):
        path = out / f"plan_{i:03d}.png"
        plot_timeline(p, plan, horizon, path, title=f"plan {i}: utility {plan.utility}")
        written.append(path)
    return written

from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from normplan.model import DurativeAction, Goal, LiteralSet, Norm, Problem, load_problem

ROOT = Path(__file__).resolve().parent.parent
SCENARIO = ROOT / "scenarios" / "disaster.nprp"

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def disaster() -> Problem:
    return load_problem(SCENARIO)


def lits(*items: str) -> LiteralSet:
    return LiteralSet.of(items)


@st.composite
def literal_sets(draw, fluents: list[str], max_size: int = 3) -> LiteralSet:
    chosen = draw(st.lists(st.sampled_from(fluents), max_size=max_size, unique=True)) if fluents else []
    return LiteralSet.of(f if draw(st.booleans()) else "!" + f for f in chosen)


@st.composite
def problems(draw, max_actions: int = 3, max_fluents: int = 5, max_norms: int = 2, max_duration: int = 3) -> Problem:
    """Small random problems; always valid, possibly with unreachable goals."""
    nf = draw(st.integers(1, max_fluents))
    fluents = [f"f{i}" for i in range(nf)]
    initial = draw(st.lists(st.sampled_from(fluents), unique=True))
    na = draw(st.integers(1, max_actions))
    actions = tuple(
        DurativeAction(
            f"a{i}",
            draw(literal_sets(fluents, 2)),
            draw(literal_sets(fluents, 3)),
            draw(st.integers(1, max_duration)),
        )
        for i in range(na)
    )
    ng = draw(st.integers(1, 2))
    goals = tuple(
        Goal(f"g{i}", draw(literal_sets(fluents, 2)), draw(st.integers(1, 20)))
        for i in range(ng)
    )
    names = [a.name for a in actions]
    nn = draw(st.integers(0, max_norms))
    norms = tuple(
        Norm(
            f"n{i}",
            draw(st.sampled_from(["obligation", "prohibition"])),
            draw(st.sampled_from(names)),
            draw(st.sampled_from(names)),
            draw(st.integers(0, 4)),
            draw(st.integers(1, 10)),
        )
        for i in range(nn)
    )
    return Problem(frozenset(fluents), frozenset(initial), actions, goals, norms, name="random")


# acceptance lines are collected here and echoed in the terminal summary so
# they show up in captured runs too
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

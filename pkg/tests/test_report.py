from __future__ import annotations

import csv
import io

from normplan.planner import SearchConfig, evaluate_schedule
from normplan.report import plans_csv, render_timeline, write_report
from normplan.semantics import Schedule

PLAN_33 = Schedule.of(("detectShock", 0), ("evacuate", 1), ("secure", 6), ("detectShock", 7),
                      ("detectShock", 8), ("buildShelter", 9), ("getMedicine", 10))


def report(p, s, q=13):
    return evaluate_schedule(p, s, SearchConfig(q))


def test_timeline_rows_and_markers(disaster):
    text = render_timeline(disaster, report(disaster, PLAN_33), 13, 1)
    lines = text.splitlines()
    assert lines[0] == "plan 1: utility 33, makespan 13"
    rows = [ln for ln in lines if ln.lstrip()[:1].isdigit()]
    assert len(rows) == 14
    assert "VIOLATED n1@7 (-5)" in text and "VIOLATED n1@8 (-5)" in text
    assert "GOAL organiseSurvivorCamp (+18)" in text
    # evacuate removes populated when it ends at 6
    row6 = next(r for r in rows if r.strip().startswith("6 |"))
    assert "+evacuated" in row6 and "-populated" in row6


def test_csv_one_row_per_run(disaster):
    plans = [report(disaster, PLAN_33), report(disaster, Schedule.of(("getMedicine", 0)))]
    rows = list(csv.DictReader(io.StringIO(plans_csv(plans, disaster))))
    assert len(rows) == len(PLAN_33) + 1
    assert {r["utility"] for r in rows} == {"33", "25"}
    assert rows[0]["violated"] == "n1@7;n1@8"
    last = rows[-1]
    assert (last["action"], last["start"], last["end"]) == ("getMedicine", "0", "3")


def test_write_report_caps_figures(disaster, tmp_path):
    plans = [report(disaster, Schedule.of(("getMedicine", t))) for t in range(4)]
    written = write_report(disaster, plans, 13, tmp_path, figures=2)
    assert [p.name for p in written] == ["plans.csv", "plan_001.png", "plan_002.png"]
    assert all(p.stat().st_size > 0 for p in written)
    assert (tmp_path / "plan_001.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

from __future__ import annotations

import json

import pytest

from normplan.aspgen import schedule_atoms
from normplan.cli import main
from normplan.model import load_problem
from normplan.planner import SearchConfig, enumerate_naive
from normplan.semantics import Schedule

from .conftest import SCENARIO

SCN = str(SCENARIO)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_scenario(capsys):
    code, out, _ = run(capsys, "validate", SCN)
    assert code == 0
    assert "0 error(s), 0 warning(s)" in out


def test_validate_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "validate", str(tmp_path / "none.nprp"))
    assert code == 1 and "no such file" in err


def test_validate_duplicate_actions(capsys, tmp_path):
    text = SCENARIO.read_text().replace("- name: secure", "- name: detectShock")
    f = tmp_path / "dup.nprp"
    f.write_text(text)
    code, out, _ = run(capsys, "validate", str(f))
    assert code == 2
    assert "duplicate" in out


def test_validate_syntax_error(capsys, tmp_path):
    f = tmp_path / "bad.nprp"
    f.write_text("fluents: [a\n")
    code, _, err = run(capsys, "validate", str(f))
    assert code == 1 and "syntax error" in err


def test_validate_json(capsys):
    code, out, _ = run(capsys, "validate", SCN, "--json")
    assert code == 0
    assert json.loads(out)["errors"] == []


def test_optimal_prints_max(capsys):
    code, out, _ = run(capsys, "optimal", SCN, "--horizon", "13", "--max", "2")
    assert code == 0
    assert "max utility: 43" in out
    assert "GOAL organiseSurvivorCamp" in out and "GOAL runningHospital" in out


def test_optimal_no_plan_short_horizon(capsys, disaster):
    assert enumerate_naive(disaster, SearchConfig(1)) == set()
    code, out, _ = run(capsys, "optimal", SCN, "--horizon", "1")
    assert code == 3 and "no plan" in out


def test_optimal_json_fields(capsys):
    code, out, _ = run(capsys, "optimal", SCN, "--horizon", "13", "--max", "3", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["max_utility"] == 43 and doc["certified"]
    assert len(doc["plans"]) == 3
    for plan in doc["plans"]:
        assert {"schedule", "satisfied", "violated", "pending", "utility"} <= set(plan)
        assert plan["utility"] == 43


def test_optimal_budget_exit_code(capsys):
    code, out, _ = run(capsys, "optimal", SCN, "--horizon", "13", "--time-budget", "0.000001")
    assert code == 4
    assert "not certified" in out or "no plan" in out


def test_plan_max_one(capsys):
    code, out, _ = run(capsys, "plan", SCN, "--horizon", "6", "--max", "1")
    assert code == 0
    assert out.count("plan 1:") == 1 and "plan 2:" not in out
    assert "1 plans (stopped: max_plans)" in out


def test_plan_min_utility(capsys):
    code, out, _ = run(capsys, "plan", SCN, "--horizon", "13", "--min-utility", "33", "--max", "13000", "--json")
    assert code == 0
    utils = {p["utility"] for p in json.loads(out)["plans"]}
    assert {33, 43} <= utils
    assert 25 not in utils and min(utils) >= 33


def test_plan_unsatisfiable(capsys, tmp_path):
    f = tmp_path / "u.nprp"
    f.write_text(
        "fluents: [p, q]\ninitial: []\nactions:\n  - {name: a, duration: 1, post: [p]}\n"
        "goals:\n  - {name: g, value: 1, requirements: [q]}\n"
    )
    code, out, _ = run(capsys, "plan", str(f), "--horizon", "3")
    assert code == 0
    assert out.strip() == "0 plans"


def test_emit_asp_optimize(capsys, tmp_path):
    out_file = tmp_path / "d.lp"
    code, _, _ = run(capsys, "emit-asp", SCN, "--horizon", "13", "--optimize", "-o", str(out_file))
    assert code == 0
    assert out_file.read_text().rstrip("\n").splitlines()[-1] == "#maximize {U:utility(U)}."


def test_emit_asp_plain(capsys):
    code, out, _ = run(capsys, "emit-asp", SCN, "--horizon", "3")
    assert code == 0 and "#maximize" not in out and "state(3)." in out


def test_emit_asp_zero_horizon(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["emit-asp", SCN, "--horizon", "0"])
    assert exc.value.code == 1
    assert "horizon must be ≥ 1" in capsys.readouterr().err


def test_check_native_optimal(capsys, tmp_path, disaster):
    code, out, _ = run(capsys, "optimal", SCN, "--horizon", "13", "--max", "2", "--json")
    plans = json.loads(out)["plans"]
    lines = []
    for plan in plans:
        sched = Schedule(tuple(tuple(e) for e in plan["schedule"]))
        lines.append(schedule_atoms(sched, disaster) + f" utility({plan['utility']})")
    f = tmp_path / "ans.txt"
    f.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "check", SCN, "--horizon", "13", "--answer-set", str(f))
    assert code == 0
    assert out.count("[ok]") == 2


def test_check_json_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "plan", SCN, "--horizon", "8", "--max", "5", "--json")
    f = tmp_path / "plans.json"
    f.write_text(out)
    code, out, _ = run(capsys, "check", SCN, "--horizon", "8", "--schedule", str(f))
    assert code == 0 and out.count("[ok]") == 5


def test_check_precondition_failure(capsys, tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("executed(evacuate,0) executed(getmedicine,1)\n")
    code, out, _ = run(capsys, "check", SCN, "--horizon", "13", "--answer-set", str(f))
    assert code == 3 and "PreconditionFailure" in out


def test_check_utility_mismatch(capsys, tmp_path):
    f = tmp_path / "mm.txt"
    f.write_text("executed(getmedicine,0) utility(30)\n")
    code, out, _ = run(capsys, "check", SCN, "--horizon", "13", "--answer-set", str(f))
    assert code == 3 and "utility mismatch" in out


def test_check_malformed(capsys, tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("executed(getmedicine,\n")
    code, _, err = run(capsys, "check", SCN, "--horizon", "13", "--answer-set", str(f))
    assert code == 1 and "malformed" in err


def test_plan_report_files(capsys, tmp_path):
    out_dir = tmp_path / "rep"
    code, _, _ = run(capsys, "plan", SCN, "--horizon", "6", "--max", "2", "--report", str(out_dir))
    assert code == 0
    assert (out_dir / "plans.csv").exists()
    assert sorted(p.name for p in out_dir.glob("*.png")) == ["plan_001.png", "plan_002.png"]


def test_unknown_verb_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_scenario_loads():
    assert load_problem(SCENARIO).name == "disaster"

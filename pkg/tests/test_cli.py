import csv
import io
import json
from pathlib import Path

import pytest

from powersched.cli import main
from powersched.core_types import load, validate

FIXTURES = Path(__file__).parent / "fixtures"
PLANS = Path(__file__).parent.parent / "plans"


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bell_alpha_three(capsys):
    assert main(["bell", "--alpha", "3"]) == 0
    assert capsys.readouterr().out == "5.000000\n"


def test_solve_one_job_has_unit_ratio(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["solve", "--kind", "nonmigratory", "--in", str(FIXTURES / "one_job.json"), "--seed", "3",
                 "--trials", "20", "--out", str(out)]) == 0
    (row,) = rows_of(out.read_text())
    assert float(row["ratio_mean"]) == 1.0
    assert row["checks_ok"] == "true"
    sched = json.loads((tmp_path / "r.schedule.json").read_text())
    assert sched["energy"] == pytest.approx(4.5)


def test_solve_single_kind_on_the_same_fixture(capsys):
    assert main(["solve", "--kind", "single", "--in", str(FIXTURES / "one_job.json"), "--trials", "5"]) == 0
    (row,) = rows_of(capsys.readouterr().out)
    assert float(row["best_energy"]) == pytest.approx(4.5)


def test_solve_is_reproducible(tmp_path):
    spec = FIXTURES / "jobshop_spec.json"
    inst = tmp_path / "shop.json"
    assert main(["gen", "--spec", str(spec), "--out", str(inst)]) == 0
    for name in ("a.csv", "b.csv"):
        assert main(["solve", "--kind", "jobshop", "--in", str(inst), "--epsilon", "1", "--seed", "5",
                     "--trials", "30", "--max-windows", "3", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_gen_writes_a_valid_instance(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen", "--spec", str(FIXTURES / "jobshop_spec.json"), "--out", str(out)]) == 0
    assert validate(load(out)) == []


def test_oracle_prints_value_and_refuses_when_capped(tmp_path, capsys):
    fixture = str(FIXTURES / "one_job.json")
    assert main(["oracle", "--kind", "nonmigratory", "--in", fixture]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(4.5)
    assert main(["oracle", "--kind", "nonmigratory", "--in", fixture, "--max-combos", "1"]) == 4


def test_exit_codes_for_bad_input(tmp_path):
    fixture = str(FIXTURES / "one_job.json")
    assert main(["solve", "--kind", "tardiness", "--in", fixture]) == 5
    assert main(["solve", "--kind", "routing", "--in", fixture]) == 3
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["solve", "--kind", "nonmigratory", "--in", str(broken)]) == 3
    assert main(["solve", "--kind", "nonmigratory", "--in", str(tmp_path / "missing.json")]) == 3
    assert main(["solve", "--kind", "nonmigratory"]) == 2
    assert main(["solve", "--kind", "nonmigratory", "--in", fixture, "--epsilon", "abc"]) == 2
    assert main(["frobnicate"]) == 2
    bad_plan = tmp_path / "plan.json"
    bad_plan.write_text(json.dumps({"seed": 1, "entries": [{"generator": {"kind": "routing"}}]}))
    assert main(["experiment", "--plan", str(bad_plan)]) == 3


def test_check_props_writes_passing_rows(tmp_path):
    out = tmp_path / "props.csv"
    assert main(["check-props", "--seed", "1", "--samples", "20000", "--out", str(out)]) == 0
    rows = rows_of(out.read_text())
    assert rows and all(r["passed"] == "true" for r in rows)


def test_table1_recomputes_the_bell_column(capsys):
    assert main(["table1"]) == 0
    text = capsys.readouterr().out
    rows = rows_of("\n".join(line for line in text.splitlines() if not line.startswith("#")))
    bell = {float(r["alpha"]): float(r["bell"]) for r in rows}
    assert bell[2.0] == pytest.approx(2.0) and bell[3.0] == pytest.approx(5.0)
    for r in rows:
        assert float(r["bell"]) == pytest.approx(float(r["transcribed_our_routing"]), abs=0.01)


def test_shipped_plan_satisfies_the_sandwich(tmp_path):
    out = tmp_path / "smoke.csv"
    assert main(["experiment", "--plan", str(PLANS / "smoke20.json"), "--out", str(out)]) == 0
    rows = rows_of(out.read_text())
    assert len(rows) == 20
    for r in rows:
        lp, ip, best = float(r["lp"]), float(r["ip"]), float(r["best_energy"])
        assert lp <= ip + 1e-6 * max(1, ip) and ip <= best + 1e-6 * max(1, best)
    timings = rows_of((tmp_path / "smoke.timings.csv").read_text())
    assert len(timings) == 20

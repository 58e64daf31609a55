import json

import pytest

from circle_conjugacy import io
from circle_conjugacy.cli import main
from circle_conjugacy.fixtures import conjugated_rotation


@pytest.fixture
def maps(tmp_path):
    c = conjugated_rotation()
    paths = {}
    for name, m in (("f", c.f), ("g", c.g)):
        p = tmp_path / f"{name}.json"
        p.write_text(io.dumps(m.to_json()))
        paths[name] = str(p)
    d = tmp_path / "d.json"
    d.write_text(json.dumps({"alpha": "golden", "length_law": {"family": "inverse_square", "params": {}},
                             "total": 0.5, "n_trunc": 200}))
    paths["denjoy"] = str(d)
    paths["dir"] = tmp_path
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_rotnum(capsys, maps):
    code, out = run(capsys, "rotnum", maps["f"], "-n", "1000")
    lo, hi = json.loads(out)["interval"]
    assert code == 0 and lo <= 0.6180339887498949 <= hi


def test_schedule_table_and_json(capsys):
    code, out = run(capsys, "schedule", "golden", "--n-max", "25")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].split() == ["k", "N", "r", "s", "w", "adapted", "reason"]
    assert [int(l.split()[0]) for l in lines[1:]] == [0, 1, 3, 6, 11, 19]
    code, out = run(capsys, "schedule", "golden", "--n-max", "25", "--json")
    assert [e["k"] for e in json.loads(out)["entries"]] == [0, 1, 3, 6, 11, 19]


def test_segment(capsys, maps):
    code, out = run(capsys, "segment", maps["g"], "-n", "3")
    res = json.loads(out)
    assert code == 0 and not res["adapted"] and res["reason"] == "j=0"


def test_denjoy_build(capsys, maps):
    out_path = maps["dir"] / "built.json"
    code, out = run(capsys, "denjoy-build", maps["denjoy"], "--out", str(out_path))
    res = json.loads(out)
    assert code == 0 and res["contains_alpha"] and res["image_length_error"] < 1e-12
    assert json.loads(out_path.read_text())["type"] == "denjoy"


def test_perturb_pass_and_infeasible(capsys, maps):
    code, out = run(capsys, "perturb", maps["g"], "--k", "19", "--r0", "1.3", "--rn", "0.6180339887498949",
                    "--eps", "0.25", "--alpha", "golden")
    assert code == 0 and json.loads(out)["certificate"]["pass"]
    code, out = run(capsys, "perturb", maps["g"], "--k", "19", "--r0", "1.3", "--rn", "0.62",
                    "--eps", "0.01", "--w", "2")
    err = json.loads(out)
    assert code == 3 and err["error"] == "Infeasible" and err["needed_w"] > 2
    code, out = run(capsys, "perturb", maps["g"], "--k", "5", "--r0", "1", "--rn", "1", "--eps", "0.1",
                    "--alpha", "golden")
    assert code == 4


def test_verify(capsys, maps):
    code, out = run(capsys, "verify", maps["f"], maps["f"])
    assert code == 0 and json.loads(out)["c1_distance"] == [0.0, 0.0]


def test_conjugate_writes_report_and_csv(capsys, maps):
    rep, csv_path = maps["dir"] / "rep.json", maps["dir"] / "d.csv"
    code, out = run(capsys, "conjugate", maps["f"], maps["g"], "--eps", "0.2", "--report", str(rep),
                    "--csv", str(csv_path))
    res = json.loads(out)
    assert code == 0 and res["pass"] and res["k"] == 32
    assert json.loads(rep.read_text()) == res
    assert csv_path.read_text().startswith("x,df,dg")


def test_conjugate_budget_exhausted(capsys, maps):
    code, out = run(capsys, "conjugate", maps["f"], maps["g"], "--eps", "0.2", "--k-max", "12")
    err = json.loads(out)
    assert code != 0 and err["error"] == "BudgetExhausted" and err["report"]["pass"] is False


@pytest.mark.parametrize("argv", [["bogus"], ["verify", "/nonexistent.json", "/nonexistent.json"],
                                  ["schedule", "nonsense-alpha"]])
def test_input_errors_exit_4(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 4 and json.loads(out)["exit_code"] == 4

import csv

import numpy as np
import pytest

from circle_conjugacy import io
from circle_conjugacy.circle_core import ClosedForm, Rotation, c1_distance, conjugate
from circle_conjugacy.errors import BudgetExhausted, RotationMismatch
from circle_conjugacy.pipeline import PipelineConfig, conjugate_towards, derivative_samples, write_derivative_csv
from circle_conjugacy.rotation_combinatorics import golden

GOLD = float(golden().value)


def test_config_guards_and_budgets():
    with pytest.raises(ValueError):
        PipelineConfig(eps=0)
    with pytest.raises(ValueError):
        PipelineConfig(k_max=1)
    b = PipelineConfig(eps=0.24).budgets(2.0)
    assert b["affine"] == pytest.approx(0.005) and b["smoothing"] == pytest.approx(0.0025)


def test_equal_maps_give_identity():
    f = ClosedForm("arnold", t=GOLD, c=0.3)
    h, rep = conjugate_towards(f, f, PipelineConfig(eps=0.1))
    assert rep.passed and rep.final_distance == [0.0, 0.0]
    xs = np.linspace(0, 1, 11)
    assert np.array_equal(h.lift(xs), xs)


def test_rotation_mismatch(conj_rot):
    with pytest.raises(RotationMismatch):
        conjugate_towards(conj_rot.f, Rotation(0.3), PipelineConfig(eps=0.2))


def test_flagship(conj_rot, flagship):
    h, rep = flagship
    assert rep.passed and rep.k <= 200
    sup, dd = rep.final_distance
    assert sup <= 0.2 and dd <= 0.2
    # independent global check on a fresh grid
    sup2, dd2 = c1_distance(conjugate(h, conj_rot.f), conj_rot.g, grid=3001)
    assert sup2 <= 0.2 and dd2 <= 0.2
    assert rep.budgets["M"] == pytest.approx(1.0)
    assert rep.stages["affine"]["pass"] and rep.stages["smoothing"]["pass"]
    assert rep.attempts[-1]["k"] == rep.k


def test_report_deterministic(conj_rot, flagship):
    _, rep = flagship
    _, rep2 = conjugate_towards(conj_rot.f, conj_rot.g, PipelineConfig(eps=0.2))
    assert io.dumps(rep.to_json()) == io.dumps(rep2.to_json())
    assert "pass" in rep.to_json() and "passed" not in rep.to_json()


def test_budget_exhausted_carries_report(conj_rot):
    with pytest.raises(BudgetExhausted) as exc:
        conjugate_towards(conj_rot.f, conj_rot.g, PipelineConfig(eps=0.2, k_max=12))
    rep = exc.value.report
    assert not rep.passed and rep.failed_stage == "perturbation"
    assert [a["k"] for a in rep.attempts] == [6, 11]


def test_derivative_csv(tmp_path, conj_rot, flagship):
    h, _ = flagship
    p = tmp_path / "d.csv"
    write_derivative_csv(p, h, conj_rot.f, conj_rot.g, n=50)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["x", "df", "dg"] and len(rows) == 51
    arr = derivative_samples(h, conj_rot.f, conj_rot.g, 50)
    assert np.allclose(np.array(rows[1:], dtype=float), arr, rtol=0, atol=0)

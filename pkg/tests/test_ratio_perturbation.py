import numpy as np
import pytest
from hypothesis import given, strategies as st

from circle_conjugacy.adapted_segments import analyze, orbit_segment
from circle_conjugacy.circle_core import CircleArc, ClosedForm, Rotation, conjugate
from circle_conjugacy.errors import EpsTooLarge, ImageMismatch, Infeasible, IteratesOverlap
from circle_conjugacy.ratio_perturbation import (
    WindowChain, composition_distortion_constant, from_odds, needed_wandering, odds,
    one_step_ratio_map, perturb_to_ratios, plan_ratio_path, solve_chain)
from circle_conjugacy.unit_maps import (
    UnitIdentity, match_endpoints, rescale_to_unit, unit_c1_distance, unit_distortion)

GOLD = 0.6180339887498949


def test_one_step_examples():
    m = one_step_ratio_map(1.0, 0.1, 0.5)
    assert m(0.5) == pytest.approx(0.55 / 1.05, abs=1e-15)
    assert m.y1 / 0.5 == pytest.approx(1.047619, abs=1e-6)
    assert (1 - m.y1) / 0.5 == pytest.approx(0.952381, abs=1e-6)
    ident = one_step_ratio_map(0.0, 0.1, 0.3)
    u = np.linspace(0, 1, 101)
    assert np.max(np.abs(ident(u) - u)) < 1e-15
    with pytest.raises(EpsTooLarge):
        one_step_ratio_map(0.5, 0.6, 0.5)


@given(st.floats(min_value=-1, max_value=1), st.floats(min_value=0.0, max_value=0.4),
       st.floats(min_value=1e-3, max_value=1 - 1e-3))
def test_one_step_ratio_identity_and_closeness(t, eps, y):
    m = one_step_ratio_map(t, eps, y)
    y1 = float(m(y))
    assert abs(odds(y1) / odds(y) - (1 + t * eps)) < 1e-10
    sup, dd = unit_c1_distance(m, UnitIdentity(), grid=801)
    assert dd <= 2 * eps + 1e-12
    # identity near both ends
    z = min(y, 1 - y) / 32
    assert m(z) == pytest.approx(z, abs=1e-16)
    assert m(1 - z) == pytest.approx(1 - z, abs=1e-15)


def test_plan_examples():
    assert plan_ratio_path(1.0, 1.2, 0.1, 10) == pytest.approx(0.3680, abs=5e-5)
    assert plan_ratio_path(2.0, 2.0, 0.3, 4) == 0.0
    with pytest.raises(Infeasible) as exc:
        plan_ratio_path(1.0, 2.0, 0.1, 3)
    assert exc.value.needed_w == needed_wandering(2.0, 0.1) == 15
    with pytest.raises(Infeasible):
        plan_ratio_path(1.0, 1.1, 0.1, 0)


@given(st.floats(min_value=0.02, max_value=0.4), st.integers(min_value=1, max_value=12),
       st.floats(min_value=-1, max_value=1), st.floats(min_value=0.05, max_value=0.95))
def test_composed_unit_path_hits_target(eps, w, s, y):
    q = (1 + s * eps / 2) ** w
    t = plan_ratio_path(1.0, q, eps, w)
    assert abs(t) <= 1 + 1e-12
    z = y
    for _ in range(w):
        m = one_step_ratio_map(t, eps / 2, z)
        assert unit_c1_distance(m, UnitIdentity(), grid=401)[1] <= eps + 1e-12
        z = float(m(z))
    assert abs(z - from_odds(q * odds(y))) < 1e-9


@given(st.floats(min_value=0.0, max_value=0.4), st.floats(min_value=0.0, max_value=1.0),
       st.integers(min_value=1, max_value=4), st.floats(min_value=-0.9, max_value=0.9))
def test_chain_solver_on_conjugated_rotation(c, x, w, s):
    g = conjugate(ClosedForm("arnold", t=0.0, c=c), Rotation(GOLD))
    chain = WindowChain.from_arc(g, x - 0.01, x + 0.012, w)
    charts = chain.charts(g)
    step = 0.05
    # a reachable end point: run the chain at some tau and ask for it back
    from circle_conjugacy.ratio_perturbation import run_chain

    target, _ = run_chain(charts, 0.4, s, step)
    tau, psis = solve_chain(charts, 0.4, target, step, 1.0, w)
    z = 0.4
    for G, psi in zip(charts, psis):
        z = float(psi(G(z)))
        assert unit_c1_distance(psi, UnitIdentity(), grid=401)[1] <= 2 * step + 1e-12
    assert abs(z - target) < 1e-9


def test_perturb_golden_k19():
    g = Rotation(GOLD)
    g1 = perturb_to_ratios(g, 0.0, 19, 2, 1.30, GOLD, 0.25)
    rep = g1.report
    assert rep["pass"] and rep["ratio_error"] < 1e-9
    assert rep["c1_distance"][1] <= 0.25
    # orbit untouched from time w on
    p0 = orbit_segment(g, 0.0, 19).points
    p1 = orbit_segment(g1, g1.base_point, 19).points
    assert np.array_equal(p0[2:], p1[2:])
    # bit-identical outside the windows
    xs = np.linspace(0, 1, 20001)
    inside = np.zeros_like(xs, dtype=bool)
    for arc in g1.plan.windows:
        inside |= arc.contains(xs, closed=True)
    assert np.array_equal(g1.lift(xs[~inside]), g.lift(xs[~inside]))
    assert len(g1.plan.windows) == 2 * 2 + 2
    assert set(g1.plan.to_json()) == {"k", "w", "t_initial", "t_final", "feasible", "eps"}


def test_perturb_identity_targets_and_infeasible():
    g = Rotation(GOLD)
    res = analyze(orbit_segment(g, 0.0, 19))
    g1 = perturb_to_ratios(g, 0.0, 19, 2, res.R0, res.Rn, 0.25)
    xs = np.linspace(0, 1, 1001)
    assert np.array_equal(g1.lift(xs), g.lift(xs))
    with pytest.raises(Infeasible) as exc:
        perturb_to_ratios(g, 0.0, 19, 2, 1.30, GOLD, 0.01)
    assert exc.value.needed_w > 2
    with pytest.raises(Infeasible) as exc:
        perturb_to_ratios(g, 0.0, 6, 0, 1.30, 1 / 1.30, 0.25)
    assert exc.value.needed_w >= 1


def test_composition_distortion_constant():
    assert composition_distortion_constant(Rotation(GOLD), CircleArc(0.0, 0.05), 3) == 1.0
    f = conjugate(ClosedForm("arnold", t=0.0, c=0.5), Rotation(GOLD))
    C = composition_distortion_constant(f, CircleArc(0.0, 0.01), 5)
    assert 1.0 < C <= 4.0
    with pytest.raises(IteratesOverlap):
        composition_distortion_constant(Rotation(GOLD), CircleArc(0.0, 0.3), 4)


def test_rescale_to_unit():
    R = Rotation(GOLD)
    G = rescale_to_unit(R, CircleArc(0.1, 0.2), CircleArc(0.1 + GOLD, 0.2 + GOLD))
    u = np.linspace(0, 1, 51)
    assert np.max(np.abs(G(u) - u)) < 1e-12
    with pytest.raises(ImageMismatch):
        rescale_to_unit(R, CircleArc(0.1, 0.2), CircleArc(0.3, 0.4))
    f = ClosedForm("arnold", t=0.1, c=0.3)
    src = CircleArc(0.2, 0.3)
    tgt = CircleArc(float(f(0.2)), float(f(0.3)))
    from circle_conjugacy.circle_core import distortion

    assert unit_distortion(rescale_to_unit(f, src, tgt), 2001) == pytest.approx(
        distortion(f, src, 2001).distortion_value, abs=1e-9)


def test_match_endpoints():
    m = one_step_ratio_map(0.5, 0.2, 0.5)
    same = match_endpoints(m, m)
    u = np.linspace(0, 1, 101)
    assert np.max(np.abs(same(u) - m(u))) < 1e-15
    mixed = match_endpoints(m, UnitIdentity(), 0.05)
    assert mixed(0.5) == pytest.approx(m(0.5))
    assert mixed(0.02) == pytest.approx(0.02)
    with pytest.raises(ValueError):
        match_endpoints(m, m, 0.3)

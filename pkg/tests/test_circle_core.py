import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from circle_conjugacy.circle_core import (
    Blended, CircleArc, ClosedForm, Composed, PWAffine, Rotation, c1_distance, circle_distance,
    conjugate, distortion, estimate_rotation_number, identity, tune_parameter_to_rotation)
from circle_conjugacy.errors import NotBracketed, RationalTarget, TwoSidedAtBreakpoint

GOLD = (math.sqrt(5) - 1) / 2


def random_pw(seed, n=5):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(0, 1, n))
    ys = np.sort(rng.uniform(0, 1, n)) + rng.uniform(0, 1)
    return PWAffine(xs, ys)


def test_arc_normalizes_and_rejects_degenerate():
    arc = CircleArc(1.25, 0.1)
    assert arc.left == 0.25 and math.isclose(arc.length, 0.85)
    assert arc.contains(0.9) and not arc.contains(0.2)
    with pytest.raises(ValueError):
        CircleArc(0.3, 0.3)


def test_rotation_exact():
    R = Rotation(0.3)
    assert R.lift(0.9) == pytest.approx(1.2)
    assert R.inverse(0.1) == pytest.approx(0.8)
    assert c1_distance(R, R) == (0.0, 0.0)


@pytest.mark.parametrize("family,params", [("arnold", {"t": 0.2, "c": 0.5}),
                                           ("cosine", {"t": 0.1, "c": 0.6}),
                                           ("two_mode", {"t": 0.33, "c1": 0.3, "c2": 0.2})])
def test_closed_form_inverse_and_degree_one(family, params):
    f = ClosedForm(family, **params)
    xs = np.linspace(-1, 2, 301)
    assert np.allclose(f.lift(xs + 1), f.lift(xs) + 1)
    assert np.max(np.abs(f.lift_inverse(f.lift(xs)) - xs)) < 1e-12
    h = 1e-6
    fd = (f.lift(xs + h) - f.lift(xs - h)) / (2 * h)
    assert np.max(np.abs(fd - f.deriv(xs))) < 1e-6


def test_pwaffine_slopes_and_one_sided():
    f = PWAffine([0.0, 0.5], [0.0, 0.25])
    assert f.deriv(0.1) == pytest.approx(0.5) and f.deriv(0.7) == pytest.approx(1.5)
    assert f.deriv(0.5, side="left") == pytest.approx(0.5)
    assert f.deriv(0.5, side="right") == pytest.approx(1.5)
    with pytest.raises(TwoSidedAtBreakpoint):
        f.deriv(0.5, side="two-sided")


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_pwaffine_inverse_roundtrip(seed):
    f = random_pw(seed)
    ys = np.linspace(0, 1, 97)
    assert np.max(np.abs(f.lift(f.lift_inverse(ys)) - ys)) < 1e-12


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_blended_is_c1_and_monotone(seed):
    f = random_pw(seed, 4)
    gaps = np.diff(np.concatenate([f.xs, [f.xs[0] + 1]]))
    eta = 0.2 * float(np.min(gaps))
    g = Blended(f, [(float(x), eta) for x in f.xs])
    for x in f.xs:
        assert g.deriv(x, side="left") == pytest.approx(g.deriv(x, side="right"), rel=1e-9)
    xs = np.linspace(0, 1, 2001)
    assert np.all(np.diff(g.lift(xs)) > 0)
    # far from the corners the blended map coincides with the host
    far = np.min(circle_distance(xs[:, None], f.xs[None, :]), axis=1) > 1.01 * eta
    assert np.allclose(g.lift(xs[far]), f.lift(xs[far]), atol=1e-13)


def test_blend_center_must_be_breakpoint():
    f = PWAffine([0.0, 0.5], [0.0, 0.25])
    with pytest.raises(ValueError):
        Blended(f, [(0.3, 0.01)])


def test_conjugate_identity_and_inverse():
    h = ClosedForm("arnold", t=0.0, c=0.4)
    R = Rotation(GOLD)
    F = conjugate(h, R)
    xs = np.linspace(0, 1, 51)
    assert np.max(circle_distance(F(F.inverse(xs)), xs)) < 1e-12
    assert c1_distance(conjugate(identity(), R), R)[1] < 1e-14


def test_composed_deriv_chain_rule():
    a, b = ClosedForm("arnold", t=0.1, c=0.3), ClosedForm("cosine", t=0.2, c=0.4)
    F = Composed([(a, False), (b, False)])
    xs = np.linspace(0, 1, 40)
    assert np.allclose(F.deriv(xs), a.deriv(b.lift(xs)) * b.deriv(xs))


def test_distortion_zero_on_affine_and_positive_otherwise():
    arc = CircleArc(0.1, 0.3)
    assert distortion(Rotation(0.2), arc).distortion_value == 0.0
    assert distortion(PWAffine([0.0, 0.5], [0.0, 0.25]), CircleArc(0.1, 0.4)).distortion_value == 0.0
    d = distortion(ClosedForm("arnold", t=0, c=0.5), arc).distortion_value
    assert d > 0.1


def test_rotation_number_interval():
    f = conjugate(ClosedForm("arnold", t=0.0, c=0.4), Rotation(GOLD))
    lo, hi = estimate_rotation_number(f, 1000)
    assert lo <= GOLD <= hi and hi - lo == pytest.approx(2e-3)
    with pytest.raises(ValueError):
        estimate_rotation_number(f, 0)


def test_tune_parameter():
    fam = lambda t: ClosedForm("arnold", t=t, c=0.5)
    t = tune_parameter_to_rotation(fam, GOLD, 1e-4, 0.0, 1.0)
    lo, hi = estimate_rotation_number(fam(t), 20000)
    assert lo - 1e-4 <= GOLD <= hi + 1e-4
    with pytest.raises(RationalTarget):
        tune_parameter_to_rotation(fam, 0.5, 1e-4, 0.0, 1.0)
    with pytest.raises(NotBracketed):
        tune_parameter_to_rotation(fam, GOLD, 1e-3, 0.8, 0.9)

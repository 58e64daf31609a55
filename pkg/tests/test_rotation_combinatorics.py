import math

import mpmath
import pytest
from hypothesis import given, strategies as st

from circle_conjugacy.adapted_segments import analyze_rotation, rotation_ratios
from circle_conjugacy.errors import TieBreak
from circle_conjugacy.rotation_combinatorics import (
    AlphaRep, alpha_from_cf, alpha_from_string, balanced_returns, brute_force_neighbors,
    brute_force_states, characteristic_times, closest_return_times, golden, in_return_window,
    initial_state, is_balanced, passes_dichotomy, rotation_adaptedness, sorted_gaps, state_at,
    states, wandering_time)

from conftest import sorted_orbit_neighbors

FIB = [2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987, 1597, 2584, 4181]


def test_recurrence_matches_running_min(alpha):
    for x, y in zip(states(alpha, 1500), brute_force_states(alpha, 1500)):
        assert x.key() == y.key()


def test_recurrence_matches_high_precision_sort():
    alpha = golden()
    chain = list(states(alpha, 600))
    for (n, a, b, r, s), stt in zip(sorted_orbit_neighbors(alpha.value, 600), chain):
        assert (stt.n, stt.r, stt.s) == (n, r, s)
        assert abs(stt.a - float(a)) < 1e-15 and abs(stt.b - float(b)) < 1e-15


@pytest.mark.parametrize("n", [1, 2, 7, 40, 333])
def test_full_sort_snapshot(alpha, n):
    assert brute_force_neighbors(alpha, n).key() == state_at(alpha, n).key()


def test_initial_state_is_literal_distances():
    a = golden()
    s0 = initial_state(a)
    assert (s0.r, s0.s) == (1, 1)
    assert s0.a_fixed + s0.b_fixed == a.scale


def test_golden_closest_returns_are_fibonacci():
    got = [n + 1 for n in closest_return_times(golden(), 4096)]
    assert got == [f for f in FIB if f <= 4097]


def test_golden_balanced_and_schedule():
    a = golden()
    assert balanced_returns(a, 25) == [1, 2, 4, 7, 12, 20]
    sched = characteristic_times(a, 25)
    assert sched.times == [0, 1, 3, 6, 11, 19]
    assert (sched.entry(6).r, sched.entry(6).s, sched.entry(6).w) == (3, 5, 0)
    assert (sched.entry(11).r, sched.entry(11).s, sched.entry(11).w) == (8, 5, 1)
    assert (sched.entry(19).r, sched.entry(19).s, sched.entry(19).w) == (8, 13, 2)
    assert sched.entry(6).adapted and not sched.entry(3).adapted
    with pytest.raises(KeyError):
        sched.entry(5)


def test_large_partial_quotients_give_strict_subsequence():
    a = alpha_from_cf([1, 10] * 10)
    cr, bal = closest_return_times(a, 300), balanced_returns(a, 300)
    assert set(bal) < set(cr)
    assert bal == [10, 11, 130, 142]


def test_no_balanced_return_below_first():
    assert balanced_returns(alpha_from_cf([1, 10] * 10), 9) == []


def test_other_alpha_schedules():
    # frozen from the recurrence, cross-checked against the sort oracle above
    assert [e.k for e in characteristic_times(alpha_from_string("sqrt2-1"), 400).adapted_entries()] == \
        [10, 27, 68, 167]
    assert [e.k for e in characteristic_times(alpha_from_string("e-2"), 400).adapted_entries()] == [5, 30, 69]


def test_closest_returns_match_record_oracle(alpha):
    prev = None
    expected = []
    for n, a, b, r, s in sorted_orbit_neighbors(alpha.value, 700, dps=60):
        if prev is not None and (r, s) != prev:
            expected.append(n - 1)
        prev = (r, s)
    got = closest_return_times(alpha, 700)
    assert got[0] == 1
    assert got[1:] == [n for n in expected if n >= 2]


def test_adapted_flag_agrees_with_index_rule(alpha):
    sched = characteristic_times(alpha, 1000)
    for e in sched.entries:
        if e.k >= 2:
            assert e.adapted == (rotation_adaptedness(e.state) is None) == (analyze_rotation(alpha, e.k) is None)


def test_rotation_ratios_exact_window(alpha):
    for e in characteristic_times(alpha, 1000).adapted_entries():
        R0, Rn = rotation_ratios(alpha, e.k)
        for R in (R0, Rn):
            assert R * 2 >= 1 and R < 2


def test_sorted_gaps_three_lengths():
    gaps = sorted_gaps(golden(), 50)
    assert len(set(gaps)) <= 3
    assert sum(gaps) == golden().scale


@given(st.integers(min_value=1, max_value=10 ** 6), st.integers(min_value=1), st.integers(min_value=1))
def test_wandering_time_bounds(n, r, s):
    r, s = 1 + r % n, 1 + s % n
    w = wandering_time(n, r, s)
    assert w >= 0
    if w > 0:
        assert 2 * w <= n - max(r, s) - 1


def test_wandering_time_rejects_bad_indices():
    with pytest.raises(ValueError):
        wandering_time(5, 0, 2)


cf_alpha = st.lists(st.integers(min_value=1, max_value=8), min_size=40, max_size=40).map(alpha_from_cf)


@given(cf_alpha, st.integers(min_value=3, max_value=400))
def test_precursor_iff_next_point_enters_window(a, n):
    for stt in states(a, n):
        if stt.n < n:
            assert stt.is_precursor == in_return_window(a, stt)


@given(cf_alpha, st.integers(min_value=2, max_value=600))
def test_neighbor_invariants(a, n):
    stt = state_at(a, n)
    assert 1 <= stt.r <= n and 1 <= stt.s <= n
    assert stt.a_fixed == a.scale - a.frac(stt.r)
    assert stt.b_fixed == a.frac(stt.s)
    # no orbit point falls strictly inside the gap around 0
    for j in range(1, n + 1):
        p = a.frac(j)
        assert p >= stt.b_fixed and a.scale - p >= stt.a_fixed


def test_rational_alpha_hits_tie():
    with pytest.raises(TieBreak):
        state_at(AlphaRep(mpmath.mpf(0.5), 96), 5)


def test_schedule_entries_balanced_and_dichotomous(alpha):
    chain = list(states(alpha, 2000))
    for e in characteristic_times(alpha, 2000).entries:
        st_N = chain[e.N - 1]
        assert st_N.is_precursor and is_balanced(st_N) and passes_dichotomy(st_N)
        assert e.k == e.N - 1


def test_cf_roundtrip():
    a = alpha_from_cf([1] * 80)
    assert abs(float(a) - (math.sqrt(5) - 1) / 2) < 1e-16
    assert alpha_from_string("[0;1,1,1]").continued_fraction == (1, 1, 1)
    with pytest.raises(ValueError):
        AlphaRep(mpmath.mpf(1.5))

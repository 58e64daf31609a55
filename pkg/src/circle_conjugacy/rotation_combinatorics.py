"""Combinatorics of the rotation orbit segments {0, alpha, ..., n alpha}.

Arithmetic is exact fixed point: alpha is stored as the integer
``A = round(alpha * 2**p)`` and ``j*alpha mod 1`` as ``j*A mod 2**p``.  For
``n << 2**p`` this is indistinguishable from the irrational rotation, and both
the recurrence and the brute-force oracle see bit-identical gaps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import mpmath

from .errors import TieBreak

DEFAULT_PRECISION = 128


@dataclass(frozen=True)
class AlphaRep:
    value: mpmath.mpf
    precision_bits: int = DEFAULT_PRECISION
    continued_fraction: Optional[tuple] = None
    fixed: int = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.value < 1:
            raise ValueError("alpha must lie in (0, 1)")
        with mpmath.workprec(self.precision_bits + 16):
            fixed = int(mpmath.nint(self.value * mpmath.mpf(2) ** self.precision_bits))
        if fixed % 2 == 0:
            # odd numerator keeps the fixed-point rational of maximal period
            fixed += 1
        object.__setattr__(self, "fixed", fixed)

    @property
    def scale(self):
        return 1 << self.precision_bits

    def __float__(self):
        return float(self.value)

    def to_real(self, k: int) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits + 8):
            return mpmath.mpf(k) / self.scale

    def frac(self, j: int) -> int:
        """Fixed-point representative of ``j*alpha mod 1``."""
        return (j * self.fixed) % self.scale

    def to_json(self):
        return {"value": mpmath.nstr(self.value, 40), "precision_bits": self.precision_bits,
                "continued_fraction": list(self.continued_fraction) if self.continued_fraction else None}


def alpha_from_cf(terms: Sequence[int], precision_bits=DEFAULT_PRECISION) -> AlphaRep:
    """alpha = [0; terms...] (finite list, truncated expansion)."""
    with mpmath.workprec(precision_bits + 32):
        x = mpmath.mpf(0)
        for a in reversed(list(terms)):
            x = 1 / (a + x)
        return AlphaRep(x, precision_bits, tuple(int(a) for a in terms))


def alpha_from_string(text: str, precision_bits=DEFAULT_PRECISION) -> AlphaRep:
    """Decimal string, a named constant (golden, silver, e-2), or a CF list "1,1,1,..."."""
    text = text.strip()
    named = {"golden": golden, "sqrt2-1": sqrt2_minus_1, "silver": sqrt2_minus_1, "e-2": e_minus_2}
    if text in named:
        return named[text](precision_bits)
    if "," in text or text.startswith("["):
        terms = [int(t) for t in text.strip("[]").replace(";", ",").split(",") if t.strip()]
        if terms and terms[0] == 0:
            terms = terms[1:]
        return alpha_from_cf(terms, precision_bits)
    with mpmath.workprec(precision_bits + 16):
        return AlphaRep(mpmath.mpf(text), precision_bits)


def golden(precision_bits=DEFAULT_PRECISION) -> AlphaRep:
    with mpmath.workprec(precision_bits + 32):
        return AlphaRep((mpmath.sqrt(5) - 1) / 2, precision_bits)


def sqrt2_minus_1(precision_bits=DEFAULT_PRECISION) -> AlphaRep:
    with mpmath.workprec(precision_bits + 32):
        return AlphaRep(mpmath.sqrt(2) - 1, precision_bits)


def e_minus_2(precision_bits=DEFAULT_PRECISION) -> AlphaRep:
    with mpmath.workprec(precision_bits + 32):
        return AlphaRep(mpmath.e - 2, precision_bits)


@dataclass(frozen=True)
class NeighborState:
    """Neighbors ``-a < 0 < b`` of 0 in {0, ..., n alpha}: ``-a = r alpha``, ``b = s alpha``.

    ``a_fixed``/``b_fixed`` are the exact fixed-point gaps; ``a``/``b`` floats.
    """

    n: int
    a_fixed: int
    b_fixed: int
    r: int
    s: int
    precision_bits: int = DEFAULT_PRECISION

    @property
    def a(self) -> float:
        return math.ldexp(self.a_fixed, -self.precision_bits)

    @property
    def b(self) -> float:
        return math.ldexp(self.b_fixed, -self.precision_bits)

    @property
    def is_precursor(self) -> bool:
        """True when n+1 is a closest return time (r + s = n + 1)."""
        return self.r + self.s == self.n + 1

    def key(self):
        return (self.n, self.a_fixed, self.b_fixed, self.r, self.s)


def initial_state(alpha: AlphaRep) -> NeighborState:
    """n = 1: both neighbors of 0 are the single point alpha; gaps are the literal
    circular distances 1 - alpha (left) and alpha (right)."""
    return NeighborState(1, alpha.scale - alpha.fixed, alpha.fixed, 1, 1, alpha.precision_bits)


def advance(state: NeighborState, alpha: AlphaRep) -> NeighborState:
    n = state.n
    if state.r + state.s != n + 1:
        return replace(state, n=n + 1)
    diff = state.a_fixed - state.b_fixed
    if abs(diff) < (1 << 8):
        raise TieBreak(f"|a - b| below precision floor at n={n}")
    if diff > 0:
        return replace(state, n=n + 1, a_fixed=diff, r=n + 1)
    return replace(state, n=n + 1, b_fixed=-diff, s=n + 1)


def states(alpha: AlphaRep, n_max: int) -> Iterator[NeighborState]:
    """Recurrence chain for n = 1..n_max."""
    st = initial_state(alpha)
    yield st
    while st.n < n_max:
        st = advance(st, alpha)
        yield st


def state_at(alpha: AlphaRep, n: int) -> NeighborState:
    st = None
    for st in states(alpha, n):
        pass
    return st


def brute_force_neighbors(alpha: AlphaRep, n: int, cap: int = 100_000) -> NeighborState:
    """Sort {j alpha mod 1 : j = 0..n} and read off the two neighbors of 0."""
    if n > cap:
        raise ValueError(f"n={n} above oracle cap {cap}")
    pts = sorted((alpha.frac(j), j) for j in range(1, n + 1))
    (b_fixed, s), (left, r) = pts[0], pts[-1]
    return NeighborState(n, alpha.scale - left, b_fixed, r, s, alpha.precision_bits)


def brute_force_states(alpha: AlphaRep, n_max: int) -> Iterator[NeighborState]:
    """Running min of right/left distances of j alpha to 0; same ground truth as
    sorting, O(n_max) overall."""
    best_b = best_a = None
    r = s = 0
    for j in range(1, n_max + 1):
        p = alpha.frac(j)
        if best_b is None or p < best_b:
            best_b, s = p, j
        left = alpha.scale - p
        if best_a is None or left < best_a:
            best_a, r = left, j
        yield NeighborState(j, best_a, best_b, r, s, alpha.precision_bits)


def sorted_gaps(alpha: AlphaRep, n: int) -> list:
    """Fixed-point gap lengths of the sorted orbit segment {0..n alpha}."""
    pts = sorted(alpha.frac(j) for j in range(n + 1))
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    gaps.append(alpha.scale - pts[-1] + pts[0])
    return gaps


def closest_return_times(alpha: AlphaRep, n_max: int) -> list:
    return [st.n for st in states(alpha, n_max) if st.is_precursor]


def in_return_window(alpha: AlphaRep, st: NeighborState) -> bool:
    """(n+1) alpha mod 1 in the open window (-a_n, b_n)."""
    p = alpha.frac(st.n + 1)
    return p < st.b_fixed or alpha.scale - p < st.a_fixed


def is_balanced(st: NeighborState) -> bool:
    return 2 * st.a_fixed >= st.b_fixed and 2 * st.b_fixed >= st.a_fixed


def balanced_returns(alpha: AlphaRep, n_max: int) -> list:
    return [st.n for st in states(alpha, n_max) if st.is_precursor and is_balanced(st)]


def wandering_time(n: int, r: int, s: int) -> int:
    if not (1 <= r <= n and 1 <= s <= n):
        raise ValueError("need 1 <= r, s <= n")
    return max(0, min((n - r - 1) // 2, (n - s - 1) // 2))


def passes_dichotomy(st: NeighborState) -> bool:
    if st.a_fixed < st.b_fixed:
        return st.r <= 2 * st.s
    return st.s <= 2 * st.r


def rotation_adaptedness(st: NeighborState) -> Optional[str]:
    """Failure reason for the rotation segment of length n, or None if adapted.

    With c = (n-s) alpha and d = (n-r) alpha the final basic interval indices are
    i = n - s, j = n - r.
    """
    n = st.n
    if n < 2:
        return "n<2"
    i, j = n - st.s, n - st.r
    if i == 0:
        return "i=0"
    if j == 0:
        return "j=0"
    if i + j == n - 1:
        return "i+j=n-1"
    return None


@dataclass(frozen=True)
class ScheduleEntry:
    k: int
    N: int
    r: int
    s: int
    a: float
    b: float
    w: int
    adapted: bool
    reason: Optional[str] = None
    state: Optional[NeighborState] = field(default=None, repr=False, compare=False)

    def to_json(self):
        return {"k": self.k, "N": self.N, "r": self.r, "s": self.s, "a": self.a, "b": self.b,
                "w": self.w, "adapted": self.adapted}


@dataclass(frozen=True)
class CharacteristicSchedule:
    alpha: AlphaRep
    entries: tuple

    @property
    def times(self):
        return [e.k for e in self.entries]

    def adapted_entries(self):
        return [e for e in self.entries if e.adapted]

    def entry(self, k):
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(k)

    def to_json(self):
        return {"alpha": self.alpha.to_json(), "entries": [e.to_json() for e in self.entries]}


def characteristic_times(alpha: AlphaRep, n_max: int, check_segments=True) -> CharacteristicSchedule:
    """Balanced closest-return precursors N passing the r/s dichotomy, emitted as
    k = N - 1 with the neighbor state recomputed at index k.

    ``adapted`` is decided by literal segment analysis of the rotation when
    ``check_segments`` (an independent route from the index rule), else by the
    index rule alone.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    chain = list(states(alpha, n_max))
    entries = []
    for st in chain:
        if not (st.is_precursor and is_balanced(st) and passes_dichotomy(st)):
            continue
        k = st.n - 1
        ks = chain[k - 1] if k >= 1 else initial_state(alpha)
        w = wandering_time(k, ks.r, ks.s) if k >= 1 and ks.r <= k and ks.s <= k else 0
        reason = rotation_adaptedness(replace(ks, n=k)) if k >= 1 else "n<2"
        if check_segments and k >= 2:
            from .adapted_segments import analyze_rotation
            seg_reason = analyze_rotation(alpha, k)
            if seg_reason != reason:
                raise AssertionError(f"index rule and segment analysis disagree at k={k}")
        entries.append(ScheduleEntry(k, st.n, ks.r, ks.s, ks.a, ks.b, w, reason is None,
                                     reason, replace(ks, n=max(k, 1))))
    return CharacteristicSchedule(alpha, tuple(entries))

"""Orbit segments of circle maps: basic intervals, adaptedness, initial/final ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .circle_core import CircleDiffeo
from .errors import LengthMismatch, NearCollision, NotAdaptedError

COLLISION_TOL = 2.0 ** -40


@dataclass(frozen=True)
class OrbitSegment:
    map: Optional[CircleDiffeo]
    base: float
    length: int
    points: np.ndarray  # circle points f^j(x) in [0, 1)
    order: tuple  # indices j sorted by circle position, rotated to start at 0

    @property
    def n(self):
        return self.length

    def cyclic_position(self):
        pos = np.empty(self.length + 1, dtype=int)
        pos[list(self.order)] = np.arange(self.length + 1)
        return pos

    def min_gap(self):
        p = np.sort(self.points)
        return float(np.min(np.diff(np.append(p, p[0] + 1.0))))

    def gap_to_neighbors(self):
        """For each index j, distance from f^j(x) to the nearest other segment point."""
        idx = np.asarray(self.order)
        p = self.points[idx]
        nxt = np.mod(np.roll(p, -1) - p, 1.0)
        prv = np.mod(p - np.roll(p, 1), 1.0)
        out = np.empty(self.length + 1)
        out[idx] = np.minimum(nxt, prv)
        return out


def _cyclic_order(points, scale=1.0):
    idx = sorted(range(len(points)), key=lambda j: points[j])
    k = idx.index(0)
    return tuple(idx[k:] + idx[:k])


def orbit_segment(f: CircleDiffeo, x: float, n: int, collision_tol=COLLISION_TOL) -> OrbitSegment:
    if n < 2:
        raise ValueError("orbit segments need n >= 2")
    pts = [float(x) % 1.0]
    lift = float(x)
    for _ in range(n):
        lift = float(f.lift(lift))
        pts.append(lift % 1.0)
    pts = np.asarray(pts)
    seg = OrbitSegment(f, float(x) % 1.0, n, pts, _cyclic_order(pts))
    if seg.min_gap() < collision_tol:
        raise NearCollision(f"two segment points closer than {collision_tol:.1e}")
    return seg


def segment_from_points(points: Sequence[float], f: Optional[CircleDiffeo] = None) -> OrbitSegment:
    pts = np.mod(np.asarray(points, dtype=float), 1.0)
    return OrbitSegment(f, float(pts[0]), len(pts) - 1, pts, _cyclic_order(pts))


@dataclass(frozen=True)
class NotAdapted:
    segment: OrbitSegment
    reason: str
    i: int
    j: int
    adapted = False

    def to_json(self):
        return {"n": self.segment.length, "i": self.i, "j": self.j, "adapted": False,
                "reason": self.reason}


@dataclass(frozen=True)
class AdaptedSegment:
    segment: OrbitSegment
    i: int
    j: int
    a_index: int
    b_index: int
    a: float
    b: float
    c: float
    d: float
    R0: float
    Rn: float
    left_gap: float   # l([a, x])
    right_gap: float  # l([x, b])
    final_left_gap: float   # l([c, f^n x])
    final_right_gap: float  # l([f^n x, d])
    adapted = True

    @property
    def n(self):
        return self.segment.length

    def to_json(self):
        return {"n": self.n, "i": self.i, "j": self.j, "R0": self.R0, "Rn": self.Rn,
                "adapted": True}


def basic_indices(order: Sequence[int], n: int):
    """(left nbr of x, right nbr of x, left nbr of f^n x = i, right nbr = j)."""
    m = len(order)
    pos = {j: k for k, j in enumerate(order)}
    a_idx, b_idx = order[(pos[0] - 1) % m], order[(pos[0] + 1) % m]
    c_idx, d_idx = order[(pos[n] - 1) % m], order[(pos[n] + 1) % m]
    return a_idx, b_idx, c_idx, d_idx


def adaptedness_reason(i: int, j: int, n: int) -> Optional[str]:
    if i == 0:
        return "i=0"
    if j == 0:
        return "j=0"
    if i + j == n - 1:
        return "i+j=n-1"
    return None


def _adjacent(order, p, q):
    """True if q immediately follows p counterclockwise in the cyclic order."""
    m = len(order)
    pos = {j: k for k, j in enumerate(order)}
    return order[(pos[p] + 1) % m] == q


def analyze(segment: OrbitSegment) -> Union[AdaptedSegment, NotAdapted]:
    n = segment.length
    order = segment.order
    a_idx, b_idx, i, j = basic_indices(order, n)
    reason = adaptedness_reason(i, j, n)
    if reason is not None:
        return NotAdapted(segment, reason, i, j)
    if a_idx != n - j or b_idx != n - i:
        raise AssertionError("basic interval index identities violated")
    # images of the final basic interval and preimages of the initial one are gaps
    if not (_adjacent(order, i + 1, j + 1) and _adjacent(order, n - j - 1, n - i - 1)):
        raise AssertionError("adapted segment fails the gap-image property")
    p = segment.points
    x, y = p[0], p[n]
    lg = (x - p[a_idx]) % 1.0
    rg = (p[b_idx] - x) % 1.0
    flg = (y - p[i]) % 1.0
    frg = (p[j] - y) % 1.0
    return AdaptedSegment(segment, i, j, a_idx, b_idx, float(p[a_idx]), float(p[b_idx]),
                          float(p[i]), float(p[j]), lg / rg, flg / frg, lg, rg, flg, frg)


def require_adapted(segment: OrbitSegment) -> AdaptedSegment:
    res = analyze(segment)
    if not res.adapted:
        raise NotAdaptedError(res.reason)
    return res


def analyze_rotation(alpha, k: int) -> Optional[str]:
    """Exact fixed-point segment analysis of R_alpha on {0..k alpha}; returns the
    failure reason or None."""
    pts = [alpha.frac(j) for j in range(k + 1)]
    order = _cyclic_order(pts)
    _, _, i, j = basic_indices(order, k)
    return adaptedness_reason(i, j, k)


def rotation_ratios(alpha, k: int):
    """Exact (R0, Rn) of R_alpha at length k as fractions of fixed-point integers."""
    from fractions import Fraction

    pts = [alpha.frac(j) for j in range(k + 1)]
    order = _cyclic_order(pts)
    a_idx, b_idx, i, j = basic_indices(order, k)
    S = alpha.scale
    lg = (pts[0] - pts[a_idx]) % S
    rg = (pts[b_idx] - pts[0]) % S
    flg = (pts[k] - pts[i]) % S
    frg = (pts[j] - pts[k]) % S
    return Fraction(lg, rg), Fraction(flg, frg)


def similarly_ordered(s1: OrbitSegment, s2: OrbitSegment) -> bool:
    if s1.length != s2.length:
        raise LengthMismatch("segments have different lengths")
    return tuple(s1.order) == tuple(s2.order)


def ratio_bound(lam: float, w: int):
    if lam <= 1 or w < 0:
        raise ValueError("need lambda > 1 and w >= 0")
    return lam ** (-w), lam ** w


def log_derivative_of_iterates(f: CircleDiffeo, x, n_max: int):
    """Array L[m-1, :] = log df^m(x) for m = 1..n_max (chain rule along orbits)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max, x.size))
    acc = np.zeros(x.size)
    z = x.copy()
    for m in range(n_max):
        acc = acc + np.log(f.deriv(z, side="right"))
        out[m] = acc
        z = f.lift(z)
    return out


def lyapunov_bound(f: CircleDiffeo, n_range: Sequence[int], x_samples=64, seed=0):
    """Smallest lambda with df^n(x) in [lambda^-n, lambda^n] for all sampled x and n in n_range."""
    n_range = sorted(int(n) for n in n_range)
    rng = np.random.default_rng(seed)
    xs = rng.random(int(x_samples))
    L = log_derivative_of_iterates(f, xs, n_range[-1])
    worst = 0.0
    for n in n_range:
        worst = max(worst, float(np.max(np.abs(L[n - 1]))) / n)
    return math.exp(worst), tuple(n_range)

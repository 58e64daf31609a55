"""Denjoy counterexamples and the conjugacy that flattens distortion on their
wandering intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .circle_core import CircleArc, CircleDiffeo, _arr, _like, distortion
from .errors import CertificateFailed, InfeasibleProfile, MassOverflow, NoWanderingDetected, NotWandering, TailNotSmall
from .rotation_combinatorics import AlphaRep
from .unit_maps import UnitChart, UnitDiffeo, UnitIdentity, unit_c1_distance


# ---------------------------------------------------------------------------
# the Denjoy fixture


@dataclass(frozen=True)
class DenjoySpec:
    """Wandering lengths ``l_n = c/(|n|+2)^2``.  Intervals with ``|n| <= n_trunc`` are
    the reported ones; the law continues to ``20 n_trunc`` (so the interval charts
    keep tending to the identity) and then shrinks geometrically with the last
    ratio until lengths drop below ``tail_floor`` relative to l_0.  ``c`` is fixed
    by ``sum l_n = total``."""

    alpha: AlphaRep
    total: float = 0.5
    n_trunc: int = 200
    tail_floor: float = 1e-18
    law: str = "inverse_square"

    def raw_lengths(self):
        N = max(20 * int(self.n_trunc), 400)
        if self.law != "inverse_square":
            raise ValueError(f"unknown length law {self.law!r}")
        base = lambda n: 1.0 / (abs(n) + 2.0) ** 2
        q = base(N + 1) / base(N)
        tail = int(math.ceil(math.log(self.tail_floor * base(0) / base(N)) / math.log(q)))
        M = N + max(tail, 1)
        idx = np.arange(-M, M + 1)
        w = np.where(np.abs(idx) <= N, 1.0 / (np.abs(idx) + 2.0) ** 2,
                     base(N) * q ** (np.abs(idx) - N).astype(float))
        return idx, w

    def lengths(self):
        if not 0.0 < self.total:
            raise MassOverflow("total wandering mass must be positive")
        if self.total >= 1.0:
            raise MassOverflow(f"total wandering mass {self.total} must be below 1")
        idx, w = self.raw_lengths()
        return idx, w * (self.total / w.sum())

    def to_json(self):
        return {"alpha": self.alpha.to_json(), "length_law": {"family": self.law, "params": {}},
                "total": self.total, "n_trunc": self.n_trunc}


def _theta(alpha: AlphaRep, m: int) -> float:
    """Correctly rounded float of ``m alpha mod 1``."""
    p = alpha.precision_bits
    return math.ldexp(alpha.frac(m) >> (p - 60), -60)


class DenjoyMap(CircleDiffeo):
    """Circle diffeo with wandering intervals ``I_m`` at the rotation orbit ``m alpha``.

    With masses l_m and ``T = sum l_m`` the coordinate of ``theta`` is
    ``P(theta) = (1-T) theta + sum_{theta_m < theta} l_m``.  Off the intervals
    ``f(P(theta)) = P(theta + alpha)``; on ``I_m`` the unit coordinate ``s`` maps
    to ``s + (r-1)(3s^2 - 2s^3)`` in units of ``l_m`` (``r = l_{m+1}/l_m``), so the
    derivative is 1 at both ends and on the minimal set.
    """

    smoothness = "C1"

    def __init__(self, spec: DenjoySpec):
        self.spec = spec
        self.alpha = spec.alpha
        self.a = float(spec.alpha.value)
        idx, ell = spec.lengths()
        self.idx, self.ell = idx, ell
        self.M = int(idx[-1])
        self.T = float(ell.sum())
        theta = np.array([_theta(spec.alpha, int(m)) for m in idx])
        order = np.argsort(theta, kind="stable")
        self.theta_s = theta[order]
        self.len_s = ell[order]
        self.m_s = idx[order]
        self.cum_s = np.concatenate([[0.0], np.cumsum(self.len_s)])[:-1]
        self.start_s = (1.0 - self.T) * self.theta_s + self.cum_s
        end = self.start_s + self.len_s
        best = np.maximum.accumulate(end)
        self._reach = np.maximum.accumulate(np.where(end >= best, np.arange(end.size), 0))
        self.pos = np.empty(idx.size, dtype=int)
        self.pos[order] = np.arange(idx.size)
        self.theta = theta
        self.start = self.start_s[self.pos]  # indexed by m + M
        nxt = np.roll(theta, -1)
        self.wrap = np.rint(theta + self.a - nxt).astype(int)  # theta_{m+1} = theta_m + a - wrap
        self.ratio = np.append(ell[1:] / ell[:-1], 1.0)

    # coordinates ---------------------------------------------------------
    def P(self, th):
        th = _arr(th)
        w = np.floor(th)
        t = th - w
        j = np.searchsorted(self.theta_s, t, side="left")
        mass = np.concatenate([[0.0], np.cumsum(self.len_s)])[j]
        return (1.0 - self.T) * t + mass + w

    def length(self, m):
        return float(self.ell[m + self.M])

    def interval(self, m) -> CircleArc:
        s = float(self.start[m + self.M])
        return CircleArc(s, s + self.length(m))

    def wandering_intervals(self, min_length=0.0, max_index=None):
        N = self.spec.n_trunc if max_index is None else max_index
        return [(m, self.interval(m)) for m in range(-N, N + 1) if self.length(m) >= min_length]

    def _locate(self, u):
        # the relevant interval is the one reaching furthest right among those
        # starting at or before u; intervals below float resolution never shadow it
        j = np.searchsorted(self.start_s, u, side="right") - 1
        j = self._reach[np.clip(j, 0, self.start_s.size - 1)]
        inside = u < self.start_s[j] + self.len_s[j]
        return j, inside

    # map -----------------------------------------------------------------
    def lift(self, x):
        x = _arr(x)
        k = np.floor(x)
        u = x - k
        j, inside = self._locate(u)
        out = np.empty_like(u)
        # wandering intervals
        if np.any(inside):
            jj = j[inside]
            m = self.m_s[jj]
            i = m + self.M
            s = (u[inside] - self.start_s[jj]) / self.len_s[jj]
            last = m == self.M
            r = self.ratio[i]
            nxt = np.where(last, i, i + 1)
            img = self.start[nxt] + self.ell[i] * (s + (r - 1.0) * (3 * s * s - 2 * s ** 3)) + self.wrap[i]
            if np.any(last):
                img = np.where(last, self.P(self.theta[i] + self.a) + self.ell[i] * s, img)
            out[inside] = img
        # slope 1 on the minimal set: offset from the image of the preceding atom
        out_m = ~inside
        if np.any(out_m):
            jj = j[out_m]
            i = self.m_s[jj] + self.M
            off = u[out_m] - self.start_s[jj] - self.len_s[jj]
            last = i == 2 * self.M
            nxt = np.where(last, i, i + 1)
            img = self.start[nxt] + self.ell[nxt] + self.wrap[i] + off
            if np.any(last):
                th = self.theta_s[jj] + off / (1.0 - self.T)
                img = np.where(last, self.P(th + self.a), img)
            out[out_m] = img
        return _like(x, out + k)

    def deriv(self, x, side="right"):
        x = _arr(x)
        u = x - np.floor(x)
        j, inside = self._locate(u)
        out = np.ones_like(u)
        if np.any(inside):
            jj = j[inside]
            i = self.m_s[jj] + self.M
            s = (u[inside] - self.start_s[jj]) / self.len_s[jj]
            out[inside] = 1.0 + (self.ratio[i] - 1.0) * 6.0 * s * (1.0 - s)
        return _like(x, out)

    def lift_inverse(self, y, tol=1e-13, max_iter=60):
        y = _arr(y)
        k = np.floor(y)
        v = y - k
        j, inside = self._locate(v)
        out = np.empty_like(v)
        m_img = self.m_s[j]
        has_pre = inside & (m_img > -self.M)
        if np.any(has_pre):
            jj = j[has_pre]
            i = m_img[has_pre] - 1 + self.M  # preimage interval index
            target = (v[has_pre] - self.start_s[jj]) / self.ell[i]
            r = self.ratio[i]
            # the cubic is increasing on [0, 1]; safeguarded Newton
            s = np.clip(target / r, 0.0, 1.0)
            lo, hi = np.zeros_like(target), np.ones_like(target)
            for _ in range(max_iter):
                res = s + (r - 1.0) * (3 * s * s - 2 * s ** 3) - target
                lo = np.where(res < 0, s, lo)
                hi = np.where(res >= 0, s, hi)
                sn = s - res / (1.0 + (r - 1.0) * 6.0 * s * (1.0 - s))
                sn = np.where((sn > lo) & (sn < hi), sn, 0.5 * (lo + hi))
                done = np.all(np.abs(sn - s) <= 1e-16)
                s = sn
                if done:
                    break
            out[has_pre] = self.start[i] + self.ell[i] * s - self.wrap[i]
        rest = ~inside & (m_img > -self.M)
        if np.any(rest):
            jj = j[rest]
            i = m_img[rest] - 1 + self.M
            off = v[rest] - self.start_s[jj] - self.len_s[jj]
            out[rest] = self.start[i] + self.ell[i] - self.wrap[i] + off
        rest = m_img == -self.M
        if np.any(rest):
            jj = j[rest]
            end = self.start_s[jj] + np.where(inside[rest], 0.0, self.len_s[jj])
            th = self.theta_s[jj] + (v[rest] - end) / (1.0 - self.T)
            out[rest] = self.P(th - self.a)
        return _like(y, out + k)

    def to_json(self):
        return {"type": "denjoy", "spec": self.spec.to_json()}


def build_denjoy(spec: DenjoySpec, n_trunc: Optional[int] = None) -> DenjoyMap:
    if n_trunc is not None:
        spec = DenjoySpec(spec.alpha, spec.total, int(n_trunc), spec.tail_floor, spec.law)
    return DenjoyMap(spec)


# ---------------------------------------------------------------------------
# symbolic chains of unit maps


class Chain(UnitDiffeo):
    """``tokens[0] o tokens[1] o ...``; each token is ``(map, inverse)``.  Adjacent
    ``m o m^-1`` pairs cancel on construction, so chains that telescope become
    the exact identity."""

    def __init__(self, tokens):
        stack = []
        for tok in tokens:
            m, inv = tok
            if isinstance(m, UnitIdentity):
                continue
            if stack and stack[-1][0] is m and stack[-1][1] != inv:
                stack.pop()
            else:
                stack.append((m, bool(inv)))
        self.tokens = stack

    @property
    def is_identity(self):
        return not self.tokens

    def inv(self):
        return Chain([(m, not i) for m, i in reversed(self.tokens)])

    def __call__(self, u):
        u = _arr(u)
        for m, inv in reversed(self.tokens):
            u = _arr(m.inverse(u) if inv else m(u))
        return _like(u, u)

    def deriv(self, u):
        u0 = _arr(u)
        u = u0
        d = np.ones_like(u)
        for m, inv in reversed(self.tokens):
            if inv:
                z = _arr(m.inverse(u))
                d = d / _arr(m.deriv(z))
                u = z
            else:
                d = d * _arr(m.deriv(u))
                u = _arr(m(u))
        return _like(u0, d)

    def inverse(self, v):
        return self.inv()(v)


class SplineUnit(UnitDiffeo):
    """Cubic Hermite copy of a unit map built from exact values and derivatives."""

    def __init__(self, F: UnitDiffeo, nodes=4097):
        x = np.linspace(0.0, 1.0, nodes)
        y = _arr(F(x)).copy()
        y[0], y[-1] = 0.0, 1.0
        self.sp = CubicHermiteSpline(x, y, _arr(F.deriv(x)))
        self.dsp = self.sp.derivative()

    def __call__(self, u):
        return _like(u, self.sp(np.clip(_arr(u), 0.0, 1.0)))

    def deriv(self, u):
        return _like(u, self.dsp(np.clip(_arr(u), 0.0, 1.0)))


class Isotopy(UnitDiffeo):
    """``F_s = (1 - s) id + s F`` (F given by a spline copy); inverse by Newton."""

    def __init__(self, F: SplineUnit, s: float):
        self.F, self.s = F, float(s)

    def __call__(self, u):
        u = _arr(u)
        return _like(u, (1 - self.s) * u + self.s * _arr(self.F(u)))

    def deriv(self, u):
        return _like(u, (1 - self.s) + self.s * _arr(self.F.deriv(_arr(u))))

    def inverse(self, v):
        if getattr(self, "_inv", None) is None:
            x = np.linspace(0.0, 1.0, 4097)
            y = _arr(self(x))
            self._inv = CubicHermiteSpline(y, x, 1.0 / _arr(self.deriv(x)))
        v = _arr(v)
        u = np.clip(self._inv(np.clip(v, 0.0, 1.0)), 0.0, 1.0)
        for _ in range(2):
            u = np.clip(u - (_arr(self(u)) - v) / _arr(self.deriv(u)), 0.0, 1.0)
        return _like(v, u)


@dataclass
class FragmentResult:
    g: dict  # index -> Chain
    f: dict  # index -> unit map
    n1: int
    k1: int
    m1: int
    n0: int
    factors: int
    F_tokens: list = field(default_factory=list)
    max_factor_distance: float = 0.0
    composition_error: float = 0.0

    def chain(self, which, lo, hi):
        """``x_hi o ... o x_lo`` as a Chain (x = 'f' or 'g'), inclusive."""
        src = self.f if which == "f" else None
        toks = []
        for i in range(hi, lo - 1, -1):
            if which == "f":
                toks.append((src[i], False))
            else:
                toks.extend(self.g[i].tokens)
        return Chain(toks)


def _unit_dist(m, grid=513):
    return max(unit_c1_distance(m, UnitIdentity(), grid))


def fragment_sequence(f_seq: Sequence[UnitDiffeo], eps: float, start: Optional[int] = None,
                      grid=513, verify=True) -> FragmentResult:
    """Replace a two-sided sequence of unit diffeos, tending to the identity, by one
    whose entries are all eps-close to the identity and whose full composition is
    unchanged.  ``f_seq[k]`` carries index ``start + k``."""
    f_seq = list(f_seq)
    if start is None:
        start = -(len(f_seq) // 2)
    lo_i, hi_i = start, start + len(f_seq) - 1
    f = {start + k: m for k, m in enumerate(f_seq)}
    dist = {i: _unit_dist(f[i], grid) for i in f}
    half = eps / 2.0
    if dist[lo_i] > half or dist[hi_i] > half:
        raise TailNotSmall(f"tail entries are not within eps/2 = {half:.3g} of the identity")
    pair = {}

    def pair_dist(i):
        if i not in pair:
            pair[i] = _unit_dist(Chain([(f[i + 1], False), (f[i], False)]), grid) if i + 1 in f else 0.0
        return pair[i]

    # smallest n1 with f_n, f_{n+1} f_n eps/2-close for |n| >= n1 (inside the range)
    n1 = max(1, max(abs(i) for i in f if dist[i] > half) + 1 if any(dist[i] > half for i in f) else 1)
    while True:
        bad = [i for i in f if abs(i) >= n1 and i + 1 in f and pair_dist(i) > half]
        if not bad:
            break
        n1 = max(abs(i) for i in bad) + 1
    if -n1 < lo_i or n1 > hi_i:
        err = TailNotSmall(f"index range [{lo_i}, {hi_i}] too short for n1 = {n1}")
        err.needed = n1 + 3
        raise err
    F_tokens = [(f[i], False) for i in range(n1, -n1 - 1, -1)]
    F = Chain(F_tokens)
    worst = _unit_dist(F, grid)
    if worst <= eps:
        Fs = [None, "F"]
    else:
        Fsp = SplineUnit(F)
        dF = _arr(F.deriv(np.linspace(0, 1, grid)))
        K = max(2, int(math.ceil(math.log(dF.max() / dF.min()) / math.log1p(eps))))
        while True:
            s = np.linspace(0.0, 1.0, K + 1)
            Fs = [None] + [Isotopy(Fsp, si) for si in s[1:-1]] + ["F"]
            dists = [_unit_dist(_isotopy_factor(Fs, j, F_tokens), grid) for j in range(K)]
            worst = max(dists)
            if worst <= eps:
                break
            K = int(math.ceil(K * 1.2))
            if K > 1 << 14:
                raise TailNotSmall("isotopy decomposition did not reach eps")
    K = len(Fs) - 1
    Kp = max(K, 2 * n1 + 2)
    m1 = -n1 + Kp - 1
    k1 = m1 - n1
    n0 = n1 + 2 * k1
    if n0 > hi_i:
        err = TailNotSmall(f"index range ends at {hi_i}, pair absorption needs {n0}")
        err.needed = n0
        raise err
    g = {}
    for i in f:
        if i < -n1 or i > n0:
            g[i] = Chain([(f[i], False)])
    for j in range(Kp):
        g[-n1 + j] = _isotopy_factor(Fs, j, F_tokens) if j < K else Chain([])
    for q in range(1, k1 + 1):
        g[m1 + q] = Chain([(f[n1 + 2 * q], False), (f[n1 + 2 * q - 1], False)])
    res = FragmentResult(g, f, n1, k1, m1, n0, K, F_tokens)
    pair_part = [_unit_dist(g[i], grid) for i in g if m1 < i <= n0]
    res.max_factor_distance = max([worst if K > 1 else _unit_dist(g[-n1], grid)] + pair_part)
    if verify:
        u = np.linspace(0.0, 1.0, 257)
        lhs = res.chain("g", lo_i, hi_i)(u)
        rhs = res.chain("f", lo_i, hi_i)(u)
        res.composition_error = float(np.max(np.abs(_arr(lhs) - _arr(rhs))))
        if res.composition_error > 1e-9:
            raise CertificateFailed(f"fragmented composition differs by {res.composition_error:.3g}")
        if res.max_factor_distance > eps * (1 + 1e-9):
            raise CertificateFailed(f"fragment factor at distance {res.max_factor_distance:.3g} > eps")
    return res


def _isotopy_factor(Fs, j, F_tokens):
    """``F_{s_{j+1}} o F_{s_j}^-1`` with F_0 = id and F_1 expanded to its tokens."""
    def toks(x, inv):
        if x is None:
            return []
        if x == "F":
            return [(m, not i) for m, i in reversed(F_tokens)] if inv else list(F_tokens)
        return [(x, inv)]
    return Chain(toks(Fs[j + 1], False) + toks(Fs[j], True))


# ---------------------------------------------------------------------------
# normalizing one wandering orbit


@dataclass
class WanderingOrbitConjugacy:
    """Local conjugators on the iterates ``f^i(I)``, ``lo <= i <= hi``; ``U[i]`` is the
    unit-chart form and equals the identity chain outside ``[-n1, n0]``."""

    base: CircleArc
    lo: int
    hi: int
    left: np.ndarray  # lift of the left end of f^i(I), index i - lo
    right: np.ndarray
    U: dict
    fragments: FragmentResult
    cutoff: int
    horizon: int
    certificate: dict = field(default_factory=dict)

    def arc(self, i):
        k = i - self.lo
        return CircleArc(self.left[k] % 1.0, self.right[k] % 1.0)

    def lift_bounds(self, i):
        k = i - self.lo
        return float(self.left[k]), float(self.right[k])

    def endpoint_derivs(self):
        """``{i: (U_i'(0), U_i'(1))}`` from ``U_{i+1}' = g_i' U_i' / f_i'`` at the fixed ends."""
        if getattr(self, "_ends", None) is None:
            e = np.array([0.0, 1.0])
            cur = np.ones(2)
            out = {self.lo: tuple(cur)}
            fr = self.fragments
            for i in range(self.lo, self.hi):
                cur = cur * _arr(fr.g[i].deriv(e)) / _arr(fr.f[i].deriv(e))
                out[i + 1] = (1.0, 1.0) if self.U[i + 1].is_identity else tuple(cur)
            self._ends = out
        return self._ends

    def touched(self):
        return [i for i in range(self.lo, self.hi + 1) if not self.U[i].is_identity]


def _iterate_arc(f, a, b, lo, hi):
    """Lifts of the ends of f^i([a, b]) for lo <= i <= hi."""
    def reduced(l, r):
        k = math.floor(l)
        return l - k, r - k

    L, R = {0: a}, {0: b}
    for i in range(1, hi + 1):
        L[i], R[i] = reduced(float(f.lift(L[i - 1])), float(f.lift(R[i - 1])))
    for i in range(-1, lo - 1, -1):
        L[i], R[i] = reduced(float(f.lift_inverse(L[i + 1])), float(f.lift_inverse(R[i + 1])))
    left = np.array([L[i] for i in range(lo, hi + 1)])
    right = np.array([R[i] for i in range(lo, hi + 1)])
    return left, right


def _check_disjoint(left, right):
    s = np.mod(left, 1.0)
    length = right - left
    if np.any(length <= 0) or np.any(length >= 1):
        raise NotWandering("iterate of the interval has degenerate length")
    order = np.argsort(s)
    ss, ll = s[order], length[order]
    gaps = np.diff(np.append(ss, ss[0] + 1.0))
    if np.any(ll > gaps * (1 + 1e-12)):
        raise NotWandering("iterates of the interval overlap")


def default_horizon(f, arc: CircleArc, eps, cap=1000, samples=33):
    """Smallest N with distortion of f below eps/2 on f^{+-N}(I) (checked up to cap)."""
    a, b = arc.lift_bounds
    fa, fb, ba, bb = a, b, a, b
    for N in range(1, cap + 1):
        fa, fb = float(f.lift(fa)), float(f.lift(fb))
        ba, bb = float(f.lift_inverse(ba)), float(f.lift_inverse(bb))
        if fb - fa <= 0 or bb - ba <= 0:
            break
        d1 = distortion(f, CircleArc(fa % 1, fb % 1), samples).distortion_value
        d2 = distortion(f, CircleArc(ba % 1, bb % 1), samples).distortion_value
        if max(d1, d2) < eps / 2:
            return N
    return cap


def _initial_span(f, a, b, half, span, cap):
    """Grow the index window until the outermost chart pairs are half-close to id."""
    def pair_far(i):
        left, right = _iterate_arc(f, a, b, min(i, 0), max(i + 2, 0))
        k = i - min(i, 0)
        pair = Chain([(UnitChart(f, left[k + 1], right[k + 1]), False), (UnitChart(f, left[k], right[k]), False)])
        return _unit_dist(pair, 129) > 0.9 * half

    while span < cap and (pair_far(span - 1) or pair_far(-span)):
        span = min(int(span * 1.25) + 1, cap)
    return span


def normalize_wandering_orbit(f: CircleDiffeo, interval: CircleArc, eps: float,
                              horizon: Optional[int] = None, max_range=4000) -> WanderingOrbitConjugacy:
    if horizon is None:
        horizon = default_horizon(f, interval, eps)
    a, b = interval.lift_bounds
    span = _initial_span(f, a, b, eps / 8.0, max(int(horizon), 2), max_range)
    while True:
        left, right = _iterate_arc(f, a, b, -span, span)
        _check_disjoint(left, right)
        charts = [UnitChart(f, left[k], right[k]) for k in range(len(left) - 1)]
        try:
            frag = fragment_sequence(charts, eps / 4.0, start=-span)
            break
        except TailNotSmall as exc:
            if span >= max_range:
                raise
            need = getattr(exc, "needed", None)
            span = min(max(need + 4, span + 1) if need else 2 * span, max_range)
    f_units = frag.f
    lo, hi = -span, span
    U = {}
    for i in range(lo, hi + 1):
        # U_i = g_{i-1} ... g_lo o f_lo^-1 ... f_{i-1}^-1
        toks = []
        for j in range(i - 1, lo - 1, -1):
            toks.extend(frag.g[j].tokens)
        toks.extend((f_units[j], True) for j in range(lo, i))
        U[i] = Chain(toks)
    woc = WanderingOrbitConjugacy(interval, lo, hi, left, right, U, frag, frag.n0, int(horizon))
    woc.certificate = _certify_orbit(woc, f, eps)
    return woc


def _certify_orbit(woc: WanderingOrbitConjugacy, f, eps, grid=65):
    """Distortion of h_{i+1} f h_i^{-1} on each level: from g_i, and cross-checked
    on a few levels through the explicit conjugators."""
    u = np.linspace(0.0, 1.0, grid)
    frag = woc.fragments
    worst, worst_i = 0.0, None
    per = {}
    for i in range(woc.lo, woc.hi):
        d = np.log(_arr(frag.g[i].deriv(u)))
        val = float(d.max() - d.min())
        per[i] = val
        if val > worst:
            worst, worst_i = val, i
    # independent route: U_{i+1}'(f_i(v)) f_i'(v) / U_i'(v) at v = U_i^{-1}(u)
    cross = 0.0
    probe = sorted({woc.lo, -frag.n1, 0, frag.m1, frag.n0 - 1, woc.hi - 1} & set(range(woc.lo, woc.hi)))
    for i in probe:
        v = _arr(woc.U[i].inverse(u[1:-1]))
        fi = frag.f[i]
        lhs = _arr(woc.U[i + 1].deriv(_arr(fi(v)))) * _arr(fi.deriv(v)) / _arr(woc.U[i].deriv(v))
        cross = max(cross, float(np.max(np.abs(lhs - _arr(frag.g[i].deriv(u[1:-1]))))))
    ok = worst <= eps and cross < 1e-6
    cert = {"max_distortion": worst, "worst_level": worst_i, "eps": eps, "cross_check": cross,
            "cutoff": woc.cutoff, "levels": [woc.lo, woc.hi], "pass": bool(ok), "per_level": per}
    if not ok:
        raise CertificateFailed("wandering-orbit normalization certificate failed", cert)
    return cert


# ---------------------------------------------------------------------------
# extension to the circle


@dataclass
class _Gap:
    a: float  # lift of the left end
    L: float
    dl: float
    dr: float
    rho: float
    c: float

    def value(self, z):
        """Integral of the profile from a to a + z (z in [0, L])."""
        z = _arr(z)
        rho, c, L = self.rho, self.c, self.L
        ramp1 = self.dl * z + (c - self.dl) * z * z / (2 * rho)
        I1 = rho * (self.dl + c) / 2
        mid = I1 + c * (z - rho)
        I2 = I1 + c * (L - 2 * rho)
        w = z - (L - rho)
        ramp2 = I2 + c * w + (self.dr - c) * w * w / (2 * rho)
        return np.where(z < rho, ramp1, np.where(z < L - rho, mid, ramp2))

    def deriv(self, z):
        z = _arr(z)
        rho, c, L = self.rho, self.c, self.L
        return np.where(z < rho, self.dl + (c - self.dl) * z / rho,
                        np.where(z < L - rho, c, c + (self.dr - c) * (z - (L - rho)) / rho))

    def inverse(self, v):
        v = _arr(v)
        lo, hi = np.zeros_like(v), np.full(v.shape, self.L)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.value(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def solve_gap_profile(a, L, dl, dr, rho_max, mass=None, gap=0) -> _Gap:
    """Ramp/plateau derivative on a gap of length L: linear from ``dl`` to the plateau
    ``c`` over ``[0, rho]``, constant, then linear to ``dr`` over ``[L - rho, L]``, with
    total integral ``mass`` (default L).  ``rho <= rho_max`` keeps the ramps off
    tracked intervals; it shrinks further so that the plateau stays positive."""
    mass = L if mass is None else float(mass)
    if mass <= 0 or L <= 0:
        raise InfeasibleProfile(f"gap {gap} has nonpositive length or mass", gap=gap)
    if rho_max <= 0:
        if abs(dl - mass / L) > 1e-12 or abs(dr - mass / L) > 1e-12:
            raise InfeasibleProfile(
                f"gap {gap}: no room to ramp from endpoint derivatives ({dl:.3g}, {dr:.3g}) "
                f"to the mean {mass / L:.3g}", gap=gap)
        return _Gap(float(a), float(L), dl, dr, 0.25 * L, mass / L)
    rho = min(rho_max, 0.25 * L, mass / (dl + dr))
    c = (mass - rho * (dl + dr) / 2.0) / (L - rho)
    if not c > 0:
        raise InfeasibleProfile(f"gap {gap} needs a nonpositive plateau derivative", gap=gap)
    return _Gap(float(a), float(L), float(dl), float(dr), float(rho), float(c))


class DenjoyConjugacy(CircleDiffeo):
    """h equal to the local conjugators on their supports and integrating a
    ramp/plateau derivative profile across each complementary gap."""

    smoothness = "C1"

    def __init__(self, supports, gaps):
        # supports: list of (lift_left, lift_right, unit map U); gaps: _Gap list
        self.supports = supports
        self.gaps = gaps
        pieces = [(s[0], "S", k) for k, s in enumerate(supports)] + [(g.a, "G", k) for k, g in enumerate(gaps)]
        pieces.sort(key=lambda p: p[0] % 1.0)
        self._starts = np.array([p[0] % 1.0 for p in pieces])
        self._pieces = pieces
        self._base = self._starts[0]

    def _piece(self, u):
        """Index into _pieces for circle points u (mod 1)."""
        j = np.searchsorted(self._starts, u, side="right") - 1
        return np.where(j < 0, len(self._pieces) - 1, j)

    def _apply(self, x, inverse=False, deriv=False):
        x = _arr(x)
        k = np.floor(x)
        u = x - k
        j = self._piece(u)
        out = np.empty_like(u)
        for idx in np.unique(j):
            m = j == idx
            start, kind, kk = self._pieces[idx]
            s0 = start % 1.0
            off = np.mod(u[m] - s0, 1.0)
            if kind == "S":
                l, r, U = self.supports[kk]
                L = r - l
                w = off / L
                if deriv:
                    out[m] = _arr(U.deriv(w))
                else:
                    out[m] = u[m] - off + L * _arr(U.inverse(w) if inverse else U(w))
            else:
                g = self.gaps[kk]
                if deriv:
                    out[m] = g.deriv(off)
                else:
                    out[m] = u[m] - off + (g.inverse(off) if inverse else g.value(off))
        return out if deriv else out + k

    def lift(self, x):
        return _like(x, self._apply(x))

    def deriv(self, x, side="right"):
        return _like(x, self._apply(x, deriv=True))

    def lift_inverse(self, y, tol=1e-13, max_iter=0):
        return _like(y, self._apply(y, inverse=True))


def extend_conjugacy(f: CircleDiffeo, locals_: Sequence[WanderingOrbitConjugacy],
                     tracked: Sequence[CircleArc] = ()) -> DenjoyConjugacy:
    """Glue local conjugators into a circle diffeo whose derivative is constant on
    every tracked interval outside their supports."""
    supports = []
    ends = []
    for loc in locals_:
        ed = loc.endpoint_derivs()
        for i in loc.touched():
            l, r = loc.lift_bounds(i)
            supports.append((l, r, loc.U[i]))
            ends.append(ed[i])
    if not supports:
        # nothing to glue: the identity, expressed as one full gap
        return DenjoyConjugacy([], [_Gap(0.0, 1.0, 1.0, 1.0, 0.25, 1.0)])
    order = sorted(range(len(supports)), key=lambda k: supports[k][0] % 1.0)
    supports = [supports[k] for k in order]
    ends = [ends[k] for k in order]
    starts = np.array([s[0] % 1.0 for s in supports])
    lens = np.array([s[1] - s[0] for s in supports])
    nxt = np.roll(starts, -1)
    nxt[-1] += 1.0
    gap_len = nxt - (starts + lens)
    if np.any(gap_len <= 0):
        raise InfeasibleProfile("local conjugator supports overlap", gap=int(np.argmin(gap_len)))
    tr = np.array(sorted(a.left for a in tracked)) if len(tracked) else np.empty(0)
    tr_len = {a.left: a.length for a in tracked}
    gaps = []
    for k in range(len(supports)):
        a = starts[k] + lens[k]
        L = gap_len[k]
        dl = float(ends[k][1])
        dr = float(ends[(k + 1) % len(supports)][0])
        clearance = 0.25 * L
        for t in tr:
            off = (t - a) % 1.0
            if 0 < off < L:
                end = off + tr_len[t]
                clearance = min(clearance, off, L - end)
        gaps.append(solve_gap_profile(a, L, dl, dr, clearance, gap=k))
    return DenjoyConjugacy(supports, gaps)


# ---------------------------------------------------------------------------
# detection and the full reduction


def detect_wandering(f: CircleDiffeo, tau=1e-5, x0=0.0, n_short=1000, n_long=4000, factor=20.0):
    """Candidate wandering intervals: known ones when the map exposes them, else
    orbit gaps of length >= tau that persist from n_short to n_long points and
    exceed ``factor`` times the median gap."""
    known = getattr(f, "wandering_intervals", None)
    if callable(known):
        return [arc for _, arc in known(min_length=tau)]
    lifts = np.empty(n_long + 1)
    x = float(x0)
    for k in range(n_long + 1):
        lifts[k] = x
        x = float(f.lift(x))
    # a (nearly) periodic tail means rational rotation: no wandering intervals
    tail = lifts[n_short:]
    for q in range(1, n_short):
        d = tail[q:] - tail[:-q]
        if np.max(np.abs(d - np.rint(d))) < 1e-9:
            raise NoWanderingDetected(f"orbit is periodic with period {q}")
    orbit = np.mod(lifts, 1.0)

    def gaps_of(pts):
        p = np.sort(pts)
        return p, np.diff(np.append(p, p[0] + 1.0))

    p1, g1 = gaps_of(orbit[:n_short + 1])
    p2, g2 = gaps_of(orbit)
    med = float(np.median(g2))
    out = []
    for k in np.nonzero((g2 >= tau) & (g2 >= factor * med))[0]:
        left = p2[k]
        j = (np.searchsorted(p1, left, side="right") - 1) % p1.size
        if g2[k] >= 0.5 * g1[j]:
            out.append(CircleArc(left, left + g2[k]))
    if not out:
        raise NoWanderingDetected("no persistent orbit gaps above the threshold")
    return out


@dataclass
class DenjoyReduction:
    h: DenjoyConjugacy
    g: CircleDiffeo
    locals: list
    tracked: list
    certificate: dict


def reduce_wandering_distortion(f: CircleDiffeo, eps: float, tau=1e-5, horizon=None,
                                max_orbits=4) -> DenjoyReduction:
    from .circle_core import conjugate

    cands = detect_wandering(f, tau)
    cands.sort(key=lambda a: -a.length)
    locs, covered = [], []
    for arc in cands:
        if len(locs) >= max_orbits:
            break
        if any(_covered(loc, arc) for loc in locs):
            continue
        locs.append(normalize_wandering_orbit(f, arc, eps, horizon))
    tracked = []
    for loc in locs:
        for i in range(loc.lo, loc.hi + 1):
            arc = loc.arc(i)
            if arc.length >= tau:
                tracked.append(arc)
    # every untouched level in an orbit window keeps a constant derivative, so the
    # identity h_{i+1} f h_i^-1 = g_i holds on it whatever its length
    untouched = [loc.arc(i) for loc in locs for i in range(loc.lo, loc.hi + 1) if loc.U[i].is_identity]
    h = extend_conjugacy(f, locs, untouched)
    g = conjugate(h, f)
    cert = certify_reduction(h, f, g, locs, eps)
    return DenjoyReduction(h, g, locs, tracked, cert)


def _covered(loc, arc):
    for i in range(loc.lo, loc.hi + 1):
        other = loc.arc(i)
        if abs(((other.left - arc.left) + 0.5) % 1.0 - 0.5) < 0.5 * arc.length:
            return True
    return False


def certify_reduction(h, f, g, locs, eps, samples=33, probes=6, seed=0):
    """Distortion of g = h f h^-1 on the tracked levels.

    Every level is bounded through its fragment g_i (the chart form of g there);
    ``probes`` levels per orbit, plus the cutoff neighbourhoods, are measured
    directly on the assembled circle maps, and the two must agree."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    direct = {}
    for n, loc in enumerate(locs):
        worst = max(worst, loc.certificate["max_distortion"])
        fr = loc.fragments
        fixed = {loc.lo, -fr.n1 - 1, -fr.n1, 0, fr.m1, fr.n0, fr.n0 + 1, loc.hi - 1}
        pick = set(int(i) for i in rng.integers(loc.lo, loc.hi, size=probes)) | fixed
        for i in sorted(k for k in pick if loc.lo <= k < loc.hi):
            l, r = loc.lift_bounds(i)
            arc = CircleArc(float(h.lift(l)) % 1.0, float(h.lift(r)) % 1.0)
            d = distortion(g, arc, samples).distortion_value
            ref = loc.certificate["per_level"][i]
            direct[(n, i)] = (d, ref)
    mismatch = max((abs(d - ref) for d, ref in direct.values()), default=0.0)
    worst_direct = max((d for d, _ in direct.values()), default=0.0)
    ok = worst <= eps and worst_direct <= eps and mismatch < 1e-3
    cert = {"max_distortion": worst, "max_direct": worst_direct, "probe_mismatch": mismatch,
            "probed_levels": len(direct), "eps": eps, "pass": bool(ok)}
    if not ok:
        raise CertificateFailed(f"reduced distortion certificate failed (worst {max(worst, worst_direct):.3g})", cert)
    return cert

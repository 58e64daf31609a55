"""Diffeomorphisms of [0, 1] fixing both endpoints, and circle maps built from them."""
from __future__ import annotations

import numpy as np

from .blends import PiecewiseBlended
from .circle_core import CircleDiffeo, _arr, _like
from .errors import ImageMismatch


class UnitDiffeo:
    """Increasing diffeomorphism of [0, 1]; subclasses supply value, derivative, inverse."""

    def __call__(self, u):
        raise NotImplementedError

    def deriv(self, u):
        raise NotImplementedError

    def inverse(self, v):
        return _bisect_inverse(self, v)

    def then(self, other: "UnitDiffeo") -> "UnitComposed":
        """``other o self``."""
        return UnitComposed([other, self])


def _bisect_inverse(m: UnitDiffeo, v, iters=60):
    v = _arr(v)
    lo = np.zeros_like(v)
    hi = np.ones_like(v)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = m(mid) < v
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return _like(v, 0.5 * (lo + hi))


class UnitIdentity(UnitDiffeo):
    def __call__(self, u):
        return _like(u, _arr(u).copy())

    def deriv(self, u):
        return _like(u, np.ones_like(_arr(u)))

    def inverse(self, v):
        return _like(v, _arr(v).copy())


class UnitPW(UnitDiffeo):
    """PiecewiseBlended map of [0, 1] (knots must start at (0,0) and end at (1,1))."""

    def __init__(self, X, Y, R=None):
        self.pb = PiecewiseBlended(X, Y, R)
        if abs(self.pb.X[0]) > 0 or abs(self.pb.X[-1] - 1) > 0:
            raise ValueError("unit map knots must span [0, 1]")
        if abs(self.pb.Y[0]) > 0 or abs(self.pb.Y[-1] - 1) > 1e-15:
            raise ValueError("unit map must fix 0 and 1")

    def __call__(self, u):
        return _like(u, self.pb(_arr(u)))

    def deriv(self, u):
        return _like(u, self.pb.deriv(_arr(u)))

    def inverse(self, v):
        return _like(v, self.pb.inverse(_arr(v)))


class UnitComposed(UnitDiffeo):
    """``maps[0] o maps[1] o ... o maps[-1]``."""

    def __init__(self, maps):
        self.maps = list(maps)

    def __call__(self, u):
        u = _arr(u)
        for m in reversed(self.maps):
            u = _arr(m(u))
        return u

    def deriv(self, u):
        u = _arr(u)
        d = np.ones_like(u)
        for m in reversed(self.maps):
            d = d * _arr(m.deriv(u))
            u = _arr(m(u))
        return d

    def inverse(self, v):
        v = _arr(v)
        for m in self.maps:
            v = _arr(m.inverse(v))
        return v


class UnitChart(UnitDiffeo):
    """``G = phi_target o g o phi_source^{-1}`` for lift intervals ``[s0, s1] -> [t0, t1]``
    with ``t0 = g(s0)`` and ``t1 = g(s1)`` taken from the lift itself."""

    def __init__(self, g: CircleDiffeo, s0: float, s1: float):
        self.g = g
        self.s0, self.s1 = float(s0), float(s1)
        self.t0 = float(g.lift(self.s0))
        self.t1 = float(g.lift(self.s1))
        self.ls = self.s1 - self.s0
        self.lt = self.t1 - self.t0

    def __call__(self, u):
        u = _arr(u)
        out = (self.g.lift(self.s0 + u * self.ls) - self.t0) / self.lt
        return _like(u, np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, out)))

    def deriv(self, u):
        u = _arr(u)
        return _like(u, self.g.deriv(self.s0 + u * self.ls) * self.ls / self.lt)

    def inverse(self, v):
        v = _arr(v)
        x = self.g.lift_inverse(self.t0 + v * self.lt)
        out = (x - self.s0) / self.ls
        return _like(v, np.where(v <= 0, 0.0, np.where(v >= 1, 1.0, out)))


def rescale_to_unit(g: CircleDiffeo, source, target, tol=1e-9) -> UnitChart:
    """Affine-chart conjugate of ``g: source -> target`` as a unit-interval map."""
    s0, s1 = source.lift_bounds
    G = UnitChart(g, s0, s1)
    off = (G.t0 - target.left + 0.5) % 1.0 - 0.5
    if abs(off) > tol or abs(G.lt - target.length) > tol:
        raise ImageMismatch("g(source) does not match target")
    return G


def smoothstep(s):
    """C^1 cutoff: 0 for s <= 0, 1 for s >= 1, cubic Hermite between."""
    s = np.clip(_arr(s), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def smoothstep_deriv(s):
    s = _arr(s)
    inside = (s > 0) & (s < 1)
    return np.where(inside, 6.0 * s * (1.0 - s), 0.0)


class UnitMix(UnitDiffeo):
    """``G + beta (H - G)`` with beta a C^1 plateau: 0 near the endpoints, 1 inside."""

    def __init__(self, H: UnitDiffeo, G: UnitDiffeo, delta: float):
        if not 0 < delta < 0.25:
            raise ValueError("delta must be in (0, 1/4)")
        self.H, self.G, self.delta = H, G, float(delta)

    def _beta(self, u):
        d = self.delta
        return smoothstep((u - d) / d) * smoothstep((1.0 - d - u) / d)

    def _beta_deriv(self, u):
        d = self.delta
        a, b = (u - d) / d, (1.0 - d - u) / d
        return (smoothstep_deriv(a) * smoothstep(b) - smoothstep(a) * smoothstep_deriv(b)) / d

    def __call__(self, u):
        u = _arr(u)
        g = _arr(self.G(u))
        return _like(u, g + self._beta(u) * (_arr(self.H(u)) - g))

    def deriv(self, u):
        u = _arr(u)
        g, h = _arr(self.G(u)), _arr(self.H(u))
        dg, dh = _arr(self.G.deriv(u)), _arr(self.H.deriv(u))
        return _like(u, dg + self._beta_deriv(u) * (h - g) + self._beta(u) * (dh - dg))


def match_endpoints(H_raw: UnitDiffeo, G: UnitDiffeo, delta=0.05) -> UnitMix:
    return UnitMix(H_raw, G, delta)


def unit_c1_distance(f: UnitDiffeo, g: UnitDiffeo, grid=2001):
    u = np.linspace(0.0, 1.0, int(grid))
    return (float(np.max(np.abs(_arr(f(u)) - _arr(g(u))))),
            float(np.max(np.abs(_arr(f.deriv(u)) - _arr(g.deriv(u))))))


def unit_distortion(f: UnitDiffeo, grid=2001):
    d = np.log(_arr(f.deriv(np.linspace(0.0, 1.0, int(grid)))))
    return float(d.max() - d.min())


class WindowMap(CircleDiffeo):
    """Circle diffeo equal to the identity except on lift windows ``[t0, t0 + L]``,
    where it is ``t0 + L psi((z - t0)/L)``.  Windows must be disjoint mod 1."""

    smoothness = "C1"

    def __init__(self, windows):
        self.windows = [(float(t0), float(L), psi) for t0, L, psi in windows]

    def _locate(self, z):
        for k, (t0, L, psi) in enumerate(self.windows):
            d = np.mod(z - t0, 1.0)
            yield k, t0, L, psi, d < L, d

    def lift(self, x):
        x = _arr(x)
        out = x.copy()
        for _, t0, L, psi, m, d in self._locate(x):
            if np.any(m):
                u = d[m] / L
                out[m] = x[m] + L * (_arr(psi(u)) - u)
        return out

    def deriv(self, x, side="right"):
        x = _arr(x)
        out = np.ones_like(x)
        for _, t0, L, psi, m, d in self._locate(x):
            if np.any(m):
                out[m] = _arr(psi.deriv(d[m] / L))
        return _like(x, out)

    def lift_inverse(self, y, tol=1e-13, max_iter=0):
        y = _arr(y)
        out = y.copy()
        for _, t0, L, psi, m, d in self._locate(y):
            if np.any(m):
                v = d[m] / L
                out[m] = y[m] + L * (_arr(psi.inverse(v)) - v)
        return _like(y, out)

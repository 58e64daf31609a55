"""Circle diffeomorphisms represented through their lifts.

Every map works on numpy arrays (or scalars) of lift coordinates.  The circle
value of ``x`` is ``lift(x) mod 1``.  Derivatives take ``side`` in
``{"left", "right", "two-sided"}``; piecewise maps return one-sided slopes at
their corners.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .blends import PiecewiseBlended
from .errors import NoConvergence, NotBracketed, RationalTarget, TwoSidedAtBreakpoint

TWO_PI = 2.0 * math.pi
TOL_INV = 1e-13
SMOOTHNESS_ORDER = {"C0": 0, "piecewise-C1": 1, "C1": 2, "C2": 3}


def _arr(x):
    return np.asarray(x, dtype=float)


def _like(x, out):
    """Return a python float when the input was a scalar."""
    if np.ndim(x) == 0:
        return float(out)
    return out


def circle_distance(x, y):
    d = np.mod(_arr(x) - _arr(y), 1.0)
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class CircleArc:
    """Counterclockwise arc from ``left`` to ``right`` (both mod 1)."""

    left: float
    right: float

    def __post_init__(self):
        object.__setattr__(self, "left", float(self.left) % 1.0)
        object.__setattr__(self, "right", float(self.right) % 1.0)
        if not 0.0 < self.length < 1.0:
            raise ValueError("arc length must lie in (0, 1)")

    @classmethod
    def from_lift(cls, a, b):
        return cls(a % 1.0, b % 1.0)

    @property
    def length(self):
        return (self.right - self.left) % 1.0

    @property
    def lift_bounds(self):
        return self.left, self.left + self.length

    def contains(self, x, closed=False):
        d = np.mod(_arr(x) - self.left, 1.0)
        if closed:
            return (d <= self.length) | np.isclose(d, 1.0, rtol=0, atol=1e-15)
        return (d > 0) & (d < self.length)

    def samples(self, n):
        a, b = self.lift_bounds
        return np.linspace(a, b, n)

    def to_json(self):
        return {"left": self.left, "right": self.right}


@dataclass(frozen=True)
class DistortionReport:
    arc: CircleArc
    distortion_value: float
    argmax: tuple

    def to_json(self):
        return {"arc": self.arc.to_json(), "distortion": self.distortion_value,
                "argmax": list(self.argmax)}


class CircleDiffeo:
    """Orientation-preserving degree-one circle map, immutable."""

    smoothness = "C1"

    def lift(self, x):
        raise NotImplementedError

    def deriv(self, x, side="right"):
        raise NotImplementedError

    def _bracket(self, y):
        lo = np.floor(y) - 1.0
        hi = lo + 3.0
        for _ in range(64):
            bad = self.lift(lo) > y
            if not np.any(bad):
                break
            lo = np.where(bad, lo - 1.0, lo)
        for _ in range(64):
            bad = self.lift(hi) < y
            if not np.any(bad):
                break
            hi = np.where(bad, hi + 1.0, hi)
        return lo, hi

    def lift_inverse(self, y, tol=TOL_INV, max_iter=200):
        """Safeguarded Newton inside a monotone bracket."""
        y = _arr(y)
        k = np.floor(y)
        yr = y - k
        lo, hi = self._bracket(yr)
        x = 0.5 * (lo + hi)
        for _ in range(max_iter):
            fx = self.lift(x) - yr
            lo = np.where(fx < 0, x, lo)
            hi = np.where(fx >= 0, x, hi)
            step = fx / self.deriv(x, side="right")
            xn = x - step
            outside = ~((xn > lo) & (xn < hi))
            xn = np.where(outside, 0.5 * (lo + hi), xn)
            if np.all(np.abs(xn - x) <= 1e-16 * (1 + np.abs(x))) or np.all(hi - lo <= 4e-16):
                x = xn
                break
            x = xn
        resid = np.abs(self.lift(x) - yr)
        if np.any(resid > tol):
            raise NoConvergence(f"inverse residual {float(np.max(resid)):.3e} exceeds {tol:.1e}")
        return _like(y, x + k)

    def __call__(self, x):
        return _like(x, np.mod(self.lift(_arr(x)), 1.0))

    def inverse(self, y):
        return _like(y, np.mod(self.lift_inverse(_arr(y)), 1.0))

    def iterate_lift(self, x, n):
        x = _arr(x)
        for _ in range(n):
            x = self.lift(x)
        return x

    def breakpoints(self):
        """Circle points where the derivative may jump (empty for smooth maps)."""
        return np.empty(0)

    def to_json(self):
        raise NotImplementedError(f"{type(self).__name__} has no JSON form")


class Rotation(CircleDiffeo):
    smoothness = "C2"

    def __init__(self, angle):
        self.angle = float(angle)

    def lift(self, x):
        return _arr(x) + self.angle

    def deriv(self, x, side="right"):
        return _like(x, np.ones_like(_arr(x)))

    def lift_inverse(self, y, tol=TOL_INV, max_iter=0):
        return _like(y, _arr(y) - self.angle)

    def to_json(self):
        return {"type": "rotation", "angle": self.angle}

    def __repr__(self):
        return f"Rotation({self.angle!r})"


def identity():
    return Rotation(0.0)


def _arnold(x, t=0.0, c=0.0):
    return x + t + c / TWO_PI * np.sin(TWO_PI * x)


def _arnold_d(x, t=0.0, c=0.0):
    return 1.0 + c * np.cos(TWO_PI * x)


def _cosine(x, t=0.0, c=0.0):
    return x + t + c * (1.0 - np.cos(TWO_PI * x)) / TWO_PI


def _cosine_d(x, t=0.0, c=0.0):
    return 1.0 + c * np.sin(TWO_PI * x)


def _two_mode(x, t=0.0, c1=0.0, c2=0.0):
    return x + t + c1 / TWO_PI * np.sin(TWO_PI * x) + c2 / (2 * TWO_PI) * np.sin(2 * TWO_PI * x)


def _two_mode_d(x, t=0.0, c1=0.0, c2=0.0):
    return 1.0 + c1 * np.cos(TWO_PI * x) + c2 * np.cos(2 * TWO_PI * x)


# name -> (lift, derivative, bound on |lift(x) - x - t| given params)
FAMILIES: dict[str, tuple[Callable, Callable, Callable]] = {
    "arnold": (_arnold, _arnold_d, lambda t=0.0, c=0.0: abs(c) / TWO_PI),
    "cosine": (_cosine, _cosine_d, lambda t=0.0, c=0.0: abs(c) / math.pi),
    "two_mode": (_two_mode, _two_mode_d,
                 lambda t=0.0, c1=0.0, c2=0.0: abs(c1) / TWO_PI + abs(c2) / (2 * TWO_PI)),
}


class ClosedForm(CircleDiffeo):
    """A registered formula family; ``c`` coefficients must keep the derivative positive."""

    smoothness = "C2"

    def __init__(self, family, **params):
        if family not in FAMILIES:
            raise KeyError(f"unknown closed-form family {family!r}")
        self.family = family
        self.params = {k: float(v) for k, v in params.items()}
        self._f, self._df, self._bound = FAMILIES[family]

    def lift(self, x):
        return self._f(_arr(x), **self.params)

    def deriv(self, x, side="right"):
        return _like(x, self._df(_arr(x), **self.params))

    def _bracket(self, y):
        t = self.params.get("t", 0.0)
        w = self._bound(**self.params) + 1e-12
        return y - t - w, y - t + w

    def to_json(self):
        return {"type": "closed_form", "family": self.family, "params": dict(self.params)}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"ClosedForm({self.family!r}, {args})"


class PWAffine(CircleDiffeo):
    """Circle homeomorphism affine between breakpoints, ``breakpoints[i] -> images[i]``.

    Both lists are in circular order; they are stored as increasing lifts with
    the images lifted to start in ``[0, 1)``.
    """

    smoothness = "piecewise-C1"

    def __init__(self, breakpoints, images, radii=None):
        xs = np.asarray(breakpoints, dtype=float)
        ys = np.asarray(images, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 1:
            raise ValueError("breakpoints and images must be equal-length 1-d arrays")
        xs = xs[0] + np.mod(xs - xs[0], 1.0)
        ys = ys[0] % 1.0 + np.mod(ys - ys[0], 1.0)
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise ValueError("breakpoints/images not in strictly increasing circular order")
        self.xs, self.ys = xs, ys
        rad = np.zeros_like(xs) if radii is None else np.asarray(radii, dtype=float)
        self.radii = rad
        X = np.concatenate([xs - 1.0, xs, xs + 1.0])
        Y = np.concatenate([ys - 1.0, ys, ys + 1.0])
        R = np.concatenate([rad, rad, rad])
        self._pb = PiecewiseBlended(X, Y, R)

    @property
    def n(self):
        return self.xs.size

    def lift(self, x):
        x = _arr(x)
        k = np.floor(x - self.xs[0])
        return self._pb(x - k) + k

    def deriv(self, x, side="right"):
        x = _arr(x)
        if side == "two-sided":
            left = self.deriv(x, "left")
            right = self.deriv(x, "right")
            if np.any(np.abs(left - right) > 1e-12 * np.maximum(np.abs(left), 1.0)):
                raise TwoSidedAtBreakpoint("left and right derivatives differ")
            return _like(x, right)
        k = np.floor(x - self.xs[0])
        return _like(x, self._pb.deriv(x - k, side=side))

    def lift_inverse(self, y, tol=TOL_INV, max_iter=0):
        y = _arr(y)
        k = np.floor(y - self.ys[0])
        return _like(y, self._pb.inverse(y - k) + k)

    def slopes(self):
        """Slope of piece ``i`` (from breakpoint i to i+1, cyclically)."""
        X = np.append(self.xs, self.xs[0] + 1.0)
        Y = np.append(self.ys, self.ys[0] + 1.0)
        return np.diff(Y) / np.diff(X)

    def left_slopes(self):
        return np.roll(self.slopes(), 1)

    def right_slopes(self):
        return self.slopes()

    def breakpoints(self):
        corner = np.abs(self.left_slopes() - self.right_slopes()) > 0
        return np.mod(self.xs[corner & (self.radii == 0)], 1.0)

    def to_json(self):
        return {"type": "pw_affine", "breakpoints": self.xs.tolist(), "images": self.ys.tolist()}


class Blended(PWAffine):
    """A PWAffine host whose corners at ``centers`` are replaced by localized
    quadratic blends of radius ``etas``."""

    smoothness = "C1"

    def __init__(self, host: PWAffine, pieces: Sequence[tuple[float, float]]):
        radii = np.zeros(host.n)
        for center, eta in pieces:
            d = circle_distance(host.xs, center)
            i = int(np.argmin(d))
            if d[i] > 1e-12:
                raise ValueError(f"blend center {center} is not a breakpoint of the host")
            radii[i] = eta
        self.host = host
        self.pieces = [(float(c), float(e)) for c, e in pieces]
        super().__init__(host.xs, host.ys, radii)
        if np.any(radii == 0):
            self.smoothness = "piecewise-C1"

    def to_json(self):
        return {"type": "blended", "host": self.host.to_json(),
                "pieces": [{"center": c, "eta": e} for c, e in self.pieces]}


class Composed(CircleDiffeo):
    """``parts[0] o parts[1] o ... o parts[-1]``; each part is ``(map, inverse)``."""

    def __init__(self, parts: Sequence[tuple[CircleDiffeo, bool]]):
        self.parts = [(m, bool(inv)) for m, inv in parts]
        if not self.parts:
            raise ValueError("empty composition")
        order = min(SMOOTHNESS_ORDER[m.smoothness] for m, _ in self.parts)
        self.smoothness = [k for k, v in SMOOTHNESS_ORDER.items() if v == order][0]

    def lift(self, x):
        x = _arr(x)
        for m, inv in reversed(self.parts):
            x = m.lift_inverse(x) if inv else m.lift(x)
        return x

    def deriv(self, x, side="right"):
        x0 = _arr(x)
        if side == "two-sided":
            left = self.deriv(x0, "left")
            right = self.deriv(x0, "right")
            if np.any(np.abs(left - right) > 1e-12 * np.maximum(np.abs(left), 1.0)):
                raise TwoSidedAtBreakpoint("left and right derivatives differ")
            return _like(x, right)
        x = x0
        d = np.ones_like(x)
        for m, inv in reversed(self.parts):
            if inv:
                xi = m.lift_inverse(x)
                d = d / m.deriv(xi, side=side)
                x = xi
            else:
                d = d * m.deriv(x, side=side)
                x = m.lift(x)
        return _like(x0, d)

    def lift_inverse(self, y, tol=TOL_INV, max_iter=200):
        y = _arr(y)
        for m, inv in self.parts:
            y = m.lift(y) if inv else m.lift_inverse(y)
        return _like(y, y)

    def breakpoints(self):
        pts = []
        for m, _ in self.parts:
            pts.extend(np.atleast_1d(m.breakpoints()).tolist())
        return np.asarray(pts)

    def to_json(self):
        return {"type": "composed",
                "parts": [{"map": m.to_json(), "inverse": inv} for m, inv in self.parts]}


# ----------------------------------------------------------------------------
# operations


def eval_map(f: CircleDiffeo, x):
    return f(x)


def derivative(f: CircleDiffeo, x, side="right"):
    return f.deriv(x, side=side)


def invert(f: CircleDiffeo, y):
    return f.inverse(y)


def conjugate(h: CircleDiffeo, f: CircleDiffeo) -> Composed:
    """``h o f o h^-1``."""
    return Composed([(h, False), (f, False), (h, True)])


def one_sided_derivs(f: CircleDiffeo, x):
    x = _arr(x)
    return f.deriv(x, side="left"), f.deriv(x, side="right")


def distortion(f: CircleDiffeo, arc: CircleArc, samples=257) -> DistortionReport:
    """max log(df(x)/df(y)) over sample pairs of the closed arc, one-sided at the ends."""
    xs = arc.samples(max(int(samples), 2))
    dl, dr = one_sided_derivs(f, xs)
    vals = np.concatenate([dr[:-1], dl[1:]])
    pts = np.concatenate([xs[:-1], xs[1:]])
    logs = np.log(vals)
    i, j = int(np.argmax(logs)), int(np.argmin(logs))
    return DistortionReport(arc, float(logs[i] - logs[j]), (float(pts[i] % 1.0), float(pts[j] % 1.0)))


def c1_distance(f: CircleDiffeo, g: CircleDiffeo, grid=2000):
    """(sup circle distance, sup derivative gap) on a midpoint grid; derivatives
    are compared side by side so corners never see a two-sided request."""
    xs = (np.arange(int(grid)) + 0.5) / grid
    sup = float(np.max(circle_distance(f.lift(xs), g.lift(xs))))
    fl, fr = one_sided_derivs(f, xs)
    gl, gr = one_sided_derivs(g, xs)
    dd = float(max(np.max(np.abs(fl - gl)), np.max(np.abs(fr - gr))))
    return sup, dd


def estimate_rotation_number(f: CircleDiffeo, n: int, x0: float = 0.0):
    """Interval ``[(F^n(x0)-x0-1)/n, (F^n(x0)-x0+1)/n]`` containing rho(f)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = float(x0)
    for _ in range(n):
        x = float(f.lift(x))
    disp = x - x0
    return (disp - 1.0) / n, (disp + 1.0) / n


def is_numerically_rational(value, max_den=1000, tol=1e-9):
    frac = Fraction(value).limit_denominator(max_den)
    return abs(float(frac) - value) < tol


def tune_parameter_to_rotation(family: Callable[[float], CircleDiffeo], target: float,
                               tol: float, lo: float, hi: float, max_iter=200):
    """Bisection on a rotation-monotone one-parameter family."""
    if is_numerically_rational(target):
        raise RationalTarget(f"target {target} is (numerically) rational")
    n = int(math.ceil(2.0 / tol))

    def mid(t):
        a, b = estimate_rotation_number(family(t), n)
        return a, b

    a_lo, b_lo = mid(lo)
    a_hi, b_hi = mid(hi)
    if not (a_lo <= target <= b_hi) or b_lo > target or a_hi < target:
        if not (0.5 * (a_lo + b_lo) <= target <= 0.5 * (a_hi + b_hi)):
            raise NotBracketed(f"parameter interval [{lo}, {hi}] does not bracket {target}")
    for _ in range(max_iter):
        t = 0.5 * (lo + hi)
        a, b = mid(t)
        if a <= target <= b and b - a <= tol + 1e-15:
            return t
        if 0.5 * (a + b) < target:
            lo = t
        else:
            hi = t
    return 0.5 * (lo + hi)

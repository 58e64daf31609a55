"""Piecewise-affine conjugacies between matched adapted segments, orbit
linearization, and smoothing of the corners by localized blends."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adapted_segments import AdaptedSegment, OrbitSegment, similarly_ordered
from .blends import Blend, blend_deriv, blend_value
from .circle_core import (Blended, CircleArc, CircleDiffeo, Composed, PWAffine, _arr, _like,
                          circle_distance, conjugate, distortion)
from .errors import CertificateFailed, LengthMismatch, OrderMismatch, PreconditionFailed, RatioMismatch, WindowsOverlap
from .unit_maps import smoothstep, smoothstep_deriv

TOL_RATIO = 1e-10
NEAR_BREAK = 1e-6
PER_COMPONENT = 64


class SegmentConjugacy(PWAffine):
    """PWAffine H with ``H(f^m(x)) = g^m(y)``, remembering both segments."""

    def __init__(self, seg_f: AdaptedSegment, seg_g: AdaptedSegment):
        order = list(seg_f.segment.order)
        super().__init__(seg_f.segment.points[order], seg_g.segment.points[order])
        self.seg_f, self.seg_g = seg_f, seg_g
        self.order = order


def build_conjugacy(seg_f: AdaptedSegment, seg_g: AdaptedSegment, tol_ratio=TOL_RATIO) -> SegmentConjugacy:
    if seg_f.n != seg_g.n:
        raise LengthMismatch("segments have different lengths")
    if not similarly_ordered(seg_f.segment, seg_g.segment):
        raise OrderMismatch("segments are not similarly ordered")
    for name in ("R0", "Rn"):
        rf, rg = getattr(seg_f, name), getattr(seg_g, name)
        if abs(rf / rg - 1.0) > tol_ratio:
            raise RatioMismatch(f"{name} differs: {rf:.12g} vs {rg:.12g}")
    H = SegmentConjugacy(seg_f, seg_g)
    pos = {j: k for k, j in enumerate(H.order)}
    left, right = H.left_slopes(), H.right_slopes()
    for m in (0, seg_f.n):
        kk = pos[m]
        if abs(left[kk] / right[kk] - 1.0) > 10 * tol_ratio:
            raise RatioMismatch(f"H not differentiable at segment point {m}")
    return H


# ---------------------------------------------------------------------------
# the affine-conjugacy certificate


@dataclass
class CertificateReport:
    bound_type: str
    epsilon: float
    worst_ratio: float
    worst_point: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self):
        out = {"bound_type": self.bound_type, "epsilon": self.epsilon, "worst_ratio": self.worst_ratio,
               "worst_point": self.worst_point, "pass": self.passed}
        out.update(self.extra)
        return out


def segment_cells(H: SegmentConjugacy):
    """Arcs (in f-coordinates) on which f maps affinely-charted pieces of H to pieces:
    every gap of the segment except the two touching f^n(x), which are merged into
    the final basic interval [c, d]."""
    seg = H.seg_f
    n = seg.n
    pts = seg.segment.points
    order = H.order
    m = len(order)
    cells = []
    for k in range(m):
        p, q = order[k], order[(k + 1) % m]
        if n in (p, q):
            continue
        cells.append(CircleArc(pts[p], pts[q]))
    cells.append(CircleArc(seg.c, seg.d))
    return cells


def measured_epsilon(H: SegmentConjugacy, f: CircleDiffeo, g: CircleDiffeo, samples=129):
    """Largest distortion of f on the cells and of g on their H-images."""
    eps = 0.0
    for arc in segment_cells(H):
        a, b = arc.lift_bounds
        img = CircleArc(float(H(a)), float(H(b)))
        eps = max(eps, distortion(f, arc, samples).distortion_value,
                  distortion(g, img, samples).distortion_value)
    return eps


def _certificate_points(H: PWAffine, per_component=PER_COMPONENT, near=NEAR_BREAK):
    """Sample points in H's image coordinates: interior of each piece plus both
    sides of every breakpoint image."""
    ys = np.append(H.ys, H.ys[0] + 1.0)
    pts = []
    for lo, hi in zip(ys[:-1], ys[1:]):
        L = hi - lo
        u = (np.arange(per_component) + 0.5) / per_component
        pts.append(lo + L * u)
        d = min(near, 0.25 * L)
        pts.append(np.array([lo + d, hi - d]))
    return np.mod(np.concatenate(pts), 1.0)


def conjugacy_derivative_certificate(H: SegmentConjugacy, f: CircleDiffeo, g: CircleDiffeo,
                                     eps: Optional[float] = None, per_component=PER_COMPONENT,
                                     raise_on_fail=True) -> CertificateReport:
    """Check ``exp(-2 eps) <= d(H f H^-1)/dg <= exp(2 eps)`` at sampled points."""
    if eps is None:
        eps = measured_epsilon(H, f, g)
    z = _certificate_points(H, per_component)
    F = conjugate(H, f)
    ratio = F.deriv(z, side="right") / g.deriv(z, side="right")
    logs = np.log(ratio)
    k = int(np.argmax(np.abs(logs)))
    bound = 2.0 * eps
    M = float(np.max(g.deriv((np.arange(4096) + 0.5) / 4096)))
    eps0 = (math.exp(2 * eps) - 1.0) * M
    passed = bool(np.all(np.abs(logs) <= bound * (1 + 1e-9) + 1e-13))
    rep = CertificateReport("multiplicative", float(eps), float(ratio[k]), float(z[k]), passed,
                            {"additive_bound": eps0, "M": M, "additive_below_3epsM": bool(eps0 < 3 * eps * M),
                             "samples": int(z.size)})
    if not passed and raise_on_fail:
        raise CertificateFailed(f"d(HfH^-1)/dg = {ratio[k]:.6g} outside exp(+-{bound:.4g})", rep)
    return rep


# ---------------------------------------------------------------------------
# blends


def blend(alpha: float, beta: float) -> Blend:
    return Blend(alpha, beta)


def blend_ratio_bound_check(alpha, beta, gamma, delta, grid=1001, rtol=1e-12) -> bool:
    """Two-sided bound of dh_{alpha,beta}/dh_{gamma,delta} between the slope
    quotients, plus the mediant inequality, on one quadruple."""
    u = np.linspace(-2.0, 2.0, int(grid))
    r = blend_deriv(alpha, beta, u) / blend_deriv(gamma, delta, u)
    lo, hi = min(alpha / gamma, beta / delta), max(alpha / gamma, beta / delta)
    ok = bool(np.all(r >= lo * (1 - rtol)) and np.all(r <= hi * (1 + rtol)))
    a, b, c, d = alpha, beta, gamma, delta
    med = (a + b) / (c + d)
    ok_med = min(a / c, b / d) * (1 - rtol) <= med <= max(a / c, b / d) * (1 + rtol)
    return ok and ok_med


@dataclass(frozen=True)
class BlendSpec:
    alpha: float
    beta: float
    center: float
    radius: float
    host: PWAffine

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.radius > 0):
            raise ValueError("blend slopes and radius must be positive")
        bps = self.host.xs % 1.0
        d = circle_distance(bps, self.center)
        others = d[d > 1e-12]
        if others.size and np.min(others) <= self.radius:
            raise WindowsOverlap("blend window meets another breakpoint")


class LocalBlend:
    """``z -> H(c) + eta h_{alpha,beta}((z - c)/eta)`` on ``[c - eta, c + eta]``."""

    def __init__(self, spec: BlendSpec):
        self.spec = spec
        self.c = float(spec.center)
        self.hc = float(spec.host.lift(self.c))

    def __call__(self, z):
        s = self.spec
        return self.hc + s.radius * blend_value(s.alpha, s.beta, (_arr(z) - self.c) / s.radius)

    def deriv(self, z):
        s = self.spec
        return blend_deriv(s.alpha, s.beta, (_arr(z) - self.c) / s.radius)


def localized_blend(spec: BlendSpec) -> LocalBlend:
    return LocalBlend(spec)


# ---------------------------------------------------------------------------
# linearization near the orbit


class OrbitLinearizer(CircleDiffeo):
    """C^1 map phi, identity off the 2 rho_m windows, with
    ``phi(p_m + d) = p_m + F^m(x + d/D_m) - F^m(x)`` for ``|d| <= rho_m``;
    here D_m = df^m(x) and rho_m = t D_m.  Then ``phi^-1 f phi`` is affine on
    each inner window, with slope df(p_m).

    The orbit displacement on each window is stored as a Chebyshev interpolant
    (the windows are tiny, so a low degree reaches rounding level); phi and its
    derivative are evaluated from that interpolant and its exact derivative.
    """

    CHEB_DEGREE = 14

    def __init__(self, f: CircleDiffeo, x: float, count: int, t: float):
        self.f, self.x, self.t = f, float(x), float(t)
        lifts = [self.x]
        D = [1.0]
        for _ in range(count - 1):
            D.append(D[-1] * float(f.deriv(lifts[-1])))
            lifts.append(float(f.lift(lifts[-1])))
        self.F = np.array(lifts)
        self.p = np.mod(self.F, 1.0)
        self.D = np.array(D)
        self.rho = self.t * self.D
        self.smoothness = "C1"
        pts = self.p
        for a in range(len(pts)):
            d = circle_distance(pts, pts[a])
            d[a] = np.inf
            if np.any(d < 2 * self.rho + 2 * self.rho[a]):
                raise WindowsOverlap(f"linearization windows around point {a} overlap")
        self._fits = [None] + [self._fit(m) for m in range(1, len(pts))]
        self.fit_error = max((e for _, _, e in self._fits[1:]), default=0.0)

    def _disp_exact(self, m, d):
        """F^m(x + d/D_m) - F^m(x) - d by direct iteration."""
        z = self.x + _arr(d) / self.D[m]
        for _ in range(m):
            z = self.f.lift(z)
        return z - self.F[m] - d

    def _fit(self, m):
        r = 2 * self.rho[m]
        cheb = np.polynomial.Chebyshev.interpolate(lambda d: self._disp_exact(m, d), self.CHEB_DEGREE,
                                                   domain=[-r, r])
        probe = np.linspace(-r, r, 7)
        err = float(np.max(np.abs(cheb(probe) - self._disp_exact(m, probe))))
        return cheb, cheb.deriv(), err

    def disp(self, m, d):
        cheb, dcheb, _ = self._fits[m]
        return cheb(d), dcheb(d)

    def _windows(self, x):
        for m in range(1, len(self.p)):
            d = np.mod(x - self.p[m] + 0.5, 1.0) - 0.5
            mask = np.abs(d) < 2 * self.rho[m]
            if np.any(mask):
                yield m, mask, d[mask]

    def _local(self, m, d):
        s = np.abs(d) / self.rho[m]
        beta = 1.0 - smoothstep(s - 1.0)
        dbeta = -smoothstep_deriv(s - 1.0) * np.sign(d) / self.rho[m]
        v, dv = self.disp(m, d)
        return d + beta * v, 1.0 + beta * dv + dbeta * v

    def lift(self, x):
        x = _arr(x)
        out = np.array(x, dtype=float, copy=True)
        for m, mask, d in self._windows(x):
            out[mask] = x[mask] + (self._local(m, d)[0] - d)
        return _like(x, out)

    def deriv(self, x, side="right"):
        x = _arr(x)
        out = np.ones_like(x)
        for m, mask, d in self._windows(x):
            out[mask] = self._local(m, d)[1]
        return _like(x, out)

    def lift_inverse(self, y, tol=1e-13, max_iter=60):
        """Safeguarded Newton inside each window (phi maps every window onto itself)."""
        y = _arr(y)
        out = np.array(y, dtype=float, copy=True)
        for m, mask, e in self._windows(y):
            r = 2 * self.rho[m]
            lo, hi = np.full(e.shape, -r), np.full(e.shape, r)
            d = e.copy()
            for _ in range(max_iter):
                v, dv = self._local(m, d)
                res = v - e
                lo = np.where(res < 0, d, lo)
                hi = np.where(res >= 0, d, hi)
                dn = d - res / dv
                bad = ~((dn > lo) & (dn < hi))
                dn = np.where(bad, 0.5 * (lo + hi), dn)
                done = np.all(np.abs(dn - d) <= 1e-16 * r + 1e-300)
                d = dn
                if done:
                    break
            out[mask] = y[mask] + (d - e)
        return _like(y, out)


def default_radius(f: CircleDiffeo, seg: OrbitSegment, factor=0.1):
    """factor * min over orbit points of gap / max(1, df^m(x)), over points 0..n+1."""
    x = float(seg.base)
    pts = [x]
    D = [1.0]
    for _ in range(seg.n + 1):
        D.append(D[-1] * float(f.deriv(pts[-1])))
        pts.append(float(f.lift(pts[-1])))
    p = np.mod(np.asarray(pts), 1.0)
    best = np.inf
    for a in range(len(p)):
        d = circle_distance(p, p[a])
        d[a] = np.inf
        best = min(best, float(np.min(d)) / max(1.0, D[a]))
    return factor * best


def linearize_near_segment(f: CircleDiffeo, segment: OrbitSegment, t: Optional[float] = None):
    """(phi, f_lin) with f_lin = phi^-1 f phi affine near the segment points."""
    if t is None:
        t = default_radius(f, segment)
    phi = OrbitLinearizer(f, segment.base, segment.n + 2, t)
    f_lin = Composed([(phi, True), (f, False), (phi, False)])
    return phi, f_lin


# ---------------------------------------------------------------------------
# smoothing


@dataclass
class SmoothingResult:
    h: Blended
    eta: float
    jump_epsilon: float
    max_gap: float
    passed: bool

    def to_json(self):
        return {"bound_type": "smoothing", "epsilon": self.jump_epsilon, "eta": self.eta,
                "max_gap": self.max_gap, "bound": 2 * self.jump_epsilon, "pass": self.passed}


def corner_jumps(H: PWAffine, f_lin: CircleDiffeo):
    """|left - right| of d(H f_lin H^-1) at every breakpoint image (g-coordinates)."""
    F = conjugate(H, f_lin)
    q = np.mod(H.ys, 1.0)
    return np.abs(F.deriv(q, side="left") - F.deriv(q, side="right"))


def smooth_conjugacy(H: SegmentConjugacy, f_lin: CircleDiffeo, phi: OrbitLinearizer,
                     eta: Optional[float] = None, eps: Optional[float] = None,
                     per_window=33, raise_on_fail=True) -> SmoothingResult:
    """Blend every corner of H at f^m(x) with radius eta_m = D_m eta."""
    seg = H.seg_f.segment
    n = seg.n
    if eta is None:
        eta = 0.5 * phi.t
    if eta > phi.t:
        raise PreconditionFailed("eta exceeds the linearization radius")
    jumps = corner_jumps(H, f_lin)
    jump_eps = float(np.max(jumps))
    if eps is not None and jump_eps > eps:
        raise PreconditionFailed(f"one-sided derivative jump {jump_eps:.3g} exceeds eps {eps:.3g}")
    pieces = [(float(seg.points[m]), float(phi.D[m] * eta)) for m in range(n + 1)]
    try:
        h = Blended(H, pieces)
    except ValueError as exc:
        raise PreconditionFailed(f"blend windows overlap: {exc}") from exc
    # certificate on g-coordinates: H-images of the blend windows plus a global grid
    zs = [(np.arange(2000) + 0.5) / 2000]
    for c, r in pieces:
        zs.append(np.mod(H.lift(np.linspace(c - 1.5 * r, c + 1.5 * r, per_window)), 1.0))
    z = np.concatenate(zs)
    dS = conjugate(h, f_lin).deriv(z, side="right")
    FH = conjugate(H, f_lin)
    gap = np.maximum(np.abs(dS - FH.deriv(z, side="left")), np.abs(dS - FH.deriv(z, side="right")))
    max_gap = float(np.max(gap))
    passed = bool(max_gap < 2 * jump_eps + 1e-12)
    res = SmoothingResult(h, float(eta), jump_eps, max_gap, passed)
    if not passed and raise_on_fail:
        raise CertificateFailed(f"smoothing gap {max_gap:.3g} not below 2 eps = {2 * jump_eps:.3g}", res.to_json())
    return res

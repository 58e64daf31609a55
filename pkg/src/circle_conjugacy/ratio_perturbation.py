"""C^1-small perturbations on wandering windows that force prescribed initial and
final ratios of an adapted segment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .adapted_segments import analyze, orbit_segment, similarly_ordered
from .circle_core import CircleArc, CircleDiffeo, Composed, _arr
from .errors import CertificateFailed, EpsTooLarge, Infeasible, IteratesOverlap, NotAdaptedError, PreconditionFailed
from .adapted_segments import log_derivative_of_iterates
from .circle_core import SMOOTHNESS_ORDER
from .unit_maps import UnitChart, UnitComposed, UnitPW, WindowMap


def odds(u):
    return u / (1.0 - u)


def from_odds(r):
    return r / (1.0 + r)


def one_step_target(t, eps, y):
    """Point y1 with odds(y1) = (1 + t eps) odds(y)."""
    return (1.0 + t * eps) * y / (1.0 + t * eps * y)


def one_step_ratio_map(t: float, eps: float, y: float) -> UnitPW:
    """Smoothed two-piece affine map of [0, 1] sending y to ``one_step_target(t, eps, y)``.

    Identity on ``[0, delta/2]`` and ``[1 - delta/2, 1]`` with ``delta = min(y, 1-y)/8``;
    corners at delta, y and 1 - delta are blended with radius delta/2.  The knot
    value Y is chosen so that the blended map hits y1 at y exactly.
    """
    if not 0.0 <= eps < 0.5:
        raise EpsTooLarge("one-step ratio map needs 0 <= eps < 1/2")
    if not -1.0 <= t <= 1.0:
        raise ValueError("t must lie in [-1, 1]")
    if not 0.0 < y < 1.0:
        raise ValueError("y must lie in (0, 1)")
    y1 = one_step_target(t, eps, y)
    delta = min(y, 1.0 - y) / 8.0
    eta = delta / 2.0
    lo, hi = delta, 1.0 - delta
    # blended value at y is Y + eta (beta - alpha)/4, linear in Y
    p, q = y - lo, hi - y
    # alpha = (Y - lo)/p, beta = (hi - Y)/q
    # Y + eta/4 ((hi - Y)/q - (Y - lo)/p) = y1
    coef = 1.0 - eta / 4.0 * (1.0 / q + 1.0 / p)
    rhs = y1 - eta / 4.0 * (hi / q + lo / p)
    Y = rhs / coef
    X = [0.0, lo, y, hi, 1.0]
    Yk = [0.0, lo, Y, hi, 1.0]
    R = [0.0, eta, eta, eta, 0.0]
    m = UnitPW(X, Yk, R)
    m.y, m.y1, m.t, m.eps = y, y1, t, eps
    return m


def feasible_range(eps, w):
    return (1.0 - eps / 2.0) ** w, (1.0 + eps / 2.0) ** w


def needed_wandering(q, eps):
    if q == 1.0:
        return 0
    step = math.log1p(eps / 2.0) if q > 1 else -math.log1p(-eps / 2.0)
    return int(math.ceil(abs(math.log(q)) / step - 1e-12))


def plan_ratio_path(r_from: float, r_to: float, eps: float, w: int) -> float:
    """Step parameter t with ``(1 + t eps/2)^w = r_to / r_from``."""
    if r_from <= 0 or r_to <= 0:
        raise ValueError("ratios must be positive")
    q = r_to / r_from
    if w < 1:
        raise Infeasible("no wandering window available (w = 0)", needed_w=max(1, needed_wandering(q, eps)))
    lo, hi = feasible_range(eps, w)
    if not lo <= q <= hi:
        raise Infeasible(f"ratio quotient {q:.6g} outside [{lo:.6g}, {hi:.6g}]",
                         needed_w=needed_wandering(q, eps))
    return (q ** (1.0 / w) - 1.0) * 2.0 / eps


def composition_distortion_constant(g: CircleDiffeo, I: CircleArc, w: int, samples=129) -> float:
    """exp of the largest distortion of g^j on I, j <= w; iterates must be disjoint."""
    if SMOOTHNESS_ORDER.get(g.smoothness, 0) < SMOOTHNESS_ORDER["C2"]:
        raise PreconditionFailed(f"bounded-distortion constant needs a C2 map, got {g.smoothness}")
    a, b = I.lift_bounds
    ends = np.array([a, b])
    arcs = []
    for _ in range(w + 1):
        arcs.append((float(ends[0]) % 1.0, float(ends[1] - ends[0])))
        ends = _arr(g.lift(ends))
    for p in range(len(arcs)):
        for q in range(p + 1, len(arcs)):
            if _arcs_overlap(arcs[p], arcs[q]):
                raise IteratesOverlap(f"g^{p}(I) and g^{q}(I) overlap")
    if w == 0:
        return 1.0
    xs = I.samples(samples)
    L = log_derivative_of_iterates(g, xs, w)
    spread = L.max(axis=1) - L.min(axis=1)
    return float(math.exp(max(0.0, float(spread.max()))))


def _arcs_overlap(p, q):
    """p, q = (start mod 1, length)."""
    d = (q[0] - p[0]) % 1.0
    return d < p[1] or (1.0 - d) < q[1]


# ---------------------------------------------------------------------------


@dataclass
class WindowChain:
    """Lift windows ``W_0 -> W_1 -> ... -> W_w`` with ``W_{m+1} = g(W_m)``."""

    left: np.ndarray
    right: np.ndarray

    @classmethod
    def from_arc(cls, g, l0, r0, w):
        left, right = [float(l0)], [float(r0)]
        for _ in range(w):
            left.append(float(g.lift(left[-1])))
            right.append(float(g.lift(right[-1])))
        return cls(np.array(left), np.array(right))

    def charts(self, g):
        return [UnitChart(g, self.left[m], self.right[m]) for m in range(len(self.left) - 1)]

    def arcs(self):
        return [CircleArc(l % 1.0, r % 1.0) for l, r in zip(self.left, self.right)]

    def length(self, m):
        return self.right[m] - self.left[m]


def run_chain(charts, z0, tau, step_eps):
    z = z0
    psis = []
    for G in charts:
        gz = float(G(z))
        psi = one_step_ratio_map(tau, step_eps, gz)
        psis.append(psi)
        z = float(psi(gz))
    return z, psis


def solve_chain(charts, z0, target_end, step_eps, q_est, w):
    """Find tau in [-1, 1] with the chain ending at target_end; all windows share tau."""
    def F(tau):
        return run_chain(charts, z0, tau, step_eps)[0] - target_end

    f_lo, f_hi = F(-1.0), F(1.0)
    if f_lo > 0 or f_hi < 0:
        raise Infeasible(f"ratio path not reachable with w={w} at step eps {step_eps:.4g}",
                         needed_w=needed_wandering(q_est, 2 * step_eps))
    if f_lo == 0:
        tau = -1.0
    elif f_hi == 0:
        tau = 1.0
    else:
        tau = brentq(F, -1.0, 1.0, xtol=1e-16, rtol=1e-15, maxiter=200)
    return tau, run_chain(charts, z0, tau, step_eps)[1]


@dataclass
class PerturbationPlan:
    k: int
    w: int
    target_R0: float
    target_Rn: float
    eps: float
    t_initial: float = 0.0
    t_final: float = 0.0
    feasible: bool = True
    windows: list = field(default_factory=list)
    step_eps: float = 0.0
    M: float = 1.0

    def to_json(self):
        return {"k": self.k, "w": self.w, "t_initial": self.t_initial, "t_final": self.t_final,
                "feasible": self.feasible, "eps": self.eps}


class WindowPerturbation(Composed):
    """``Psi o g`` with Psi supported on the target windows; carries the shifted base point."""

    def __init__(self, g, psi_map, base_point, plan, report=None):
        super().__init__([(psi_map, False), (g, False)])
        self.g, self.psi_map = g, psi_map
        self.base_point = base_point
        self.plan = plan
        self.report = report or {}
        self.smoothness = "C1"


def max_derivative(g: CircleDiffeo, grid=4096):
    xs = (np.arange(grid) + 0.5) / grid
    return float(np.max(g.deriv(xs)))


def windowed_c1_distance(f, g, arcs, per_window=257, grid=4000):
    """c1 distance on a global grid refined inside each arc."""
    pts = [(np.arange(grid) + 0.5) / grid]
    for arc in arcs:
        a, b = arc.lift_bounds
        pts.append(np.linspace(a, b, per_window))
    xs = np.concatenate(pts)
    sup = float(np.max(np.abs(((f.lift(xs) - g.lift(xs)) + 0.5) % 1.0 - 0.5)))
    dd = 0.0
    for side in ("left", "right"):
        dd = max(dd, float(np.max(np.abs(f.deriv(xs, side=side) - g.deriv(xs, side=side)))))
    return sup, dd


def perturb_to_ratios(g: CircleDiffeo, y: float, k: int, w: int, target_R0: float,
                      target_Rn: float, eps: float, ratio_tol=1e-9) -> WindowPerturbation:
    """Perturb g on ``g^m(I), g^{m-w}(J)``, ``m < w``, so that the length-k segment
    through the shifted base point has the target ratios."""
    seg = orbit_segment(g, y, k)
    res = analyze(seg)
    if not res.adapted:
        raise NotAdaptedError(res.reason)
    M = max_derivative(g)
    eps_unit = eps / M
    step = eps_unit / 2.0
    n, p = k, seg.points
    r, s = res.a_index, res.b_index  # a = g^r(y), b = g^s(y)
    i, j = res.i, res.j  # c = g^i(y), d = g^j(y)
    plan = PerturbationPlan(k, w, target_R0, target_Rn, eps, step_eps=step, M=M)
    q0, qn = target_R0 / res.R0, target_Rn / res.Rn
    if w < 1:
        plan.feasible = False
        raise Infeasible("characteristic time has no wandering window (w = 0)",
                         needed_w=max(1, needed_wandering(q0, eps_unit), needed_wandering(qn, eps_unit)))
    if min(r, s) < w or max(r, s) > n - w or i < w or j < w:
        raise Infeasible(f"segment indices leave no room for w={w} windows", needed_w=None)

    psi_windows = []
    y_lift = float(y)
    # initial ratio: windows g^m(I), I = (a, b) around y
    if abs(q0 - 1.0) > 0:
        chain = WindowChain.from_arc(g, y_lift - res.left_gap, y_lift + res.right_gap, w)
        charts = chain.charts(g)
        t1 = from_odds(target_R0)
        yw = float(g.iterate_lift(y_lift, w))
        t2 = (yw - chain.left[w]) / chain.length(w)
        plan.t_initial, psis = solve_chain(charts, t1, t2, step, q0, w)
        for m, psi in enumerate(psis):
            psi_windows.append((chain.left[m + 1], chain.length(m + 1), psi))
        y1 = chain.left[0] + t1 * chain.length(0)
        plan.windows += chain.arcs()
    else:
        y1 = y_lift
    # final ratio: windows g^{m-w}(J), J = (c, d) around g^n(y)
    if abs(qn - 1.0) > 0:
        base = float(p[n - w])
        lg = (base - p[i - w]) % 1.0
        rg = (p[j - w] - base) % 1.0
        chain = WindowChain.from_arc(g, base - lg, base + rg, w)
        charts = chain.charts(g)
        plan.t_final, psis = solve_chain(charts, lg / (lg + rg), from_odds(target_Rn), step, qn, w)
        for m, psi in enumerate(psis):
            psi_windows.append((chain.left[m + 1], chain.length(m + 1), psi))
        plan.windows += chain.arcs()

    g1 = WindowPerturbation(g, WindowMap(psi_windows), y1 % 1.0, plan)
    g1.report = certify_perturbation(g, g1, seg, k, w, target_R0, target_Rn, eps, ratio_tol)
    return g1


def certify_perturbation(g, g1, seg, k, w, target_R0, target_Rn, eps, ratio_tol):
    plan = g1.plan
    sup, dd = windowed_c1_distance(g1, g, plan.windows)
    seg1 = orbit_segment(g1, g1.base_point, k)
    ordered = similarly_ordered(seg1, seg)
    res1 = analyze(seg1)
    report = {"c1_distance": [sup, dd], "similarly_ordered": ordered, "adapted": bool(res1.adapted)}
    if res1.adapted:
        report["R0"], report["Rn"] = res1.R0, res1.Rn
        report["ratio_error"] = max(abs(res1.R0 / target_R0 - 1), abs(res1.Rn / target_Rn - 1))
    # untouched middle of the orbit
    mid = np.arange(w, k - w + 1)
    report["orbit_shift"] = float(np.max(np.abs(((seg1.points[mid] - seg.points[mid]) + 0.5) % 1.0 - 0.5))) if mid.size else 0.0
    ok = (dd <= eps and ordered and res1.adapted and report.get("ratio_error", 1.0) <= ratio_tol
          and report["orbit_shift"] <= 1e-12)
    report["pass"] = bool(ok)
    if not ok:
        raise CertificateFailed("perturbation certificate failed", report)
    return report

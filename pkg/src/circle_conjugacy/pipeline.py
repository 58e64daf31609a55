"""End-to-end driver: a smooth h with ``h f h^-1`` C^1-close to g."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .adapted_segments import analyze, orbit_segment, similarly_ordered
from .circle_core import (CircleArc, CircleDiffeo, Composed, Rotation, c1_distance, conjugate,
                          estimate_rotation_number, identity)
from .conjugacy_builder import (build_conjugacy, conjugacy_derivative_certificate, linearize_near_segment,
                                smooth_conjugacy)
from .errors import BudgetExhausted, CircleConjugacyError, Infeasible, NoWanderingDetected, RotationMismatch
from .io import parse_alpha
from .ratio_perturbation import max_derivative, perturb_to_ratios, windowed_c1_distance
from .rotation_combinatorics import characteristic_times


@dataclass(frozen=True)
class PipelineConfig:
    eps: float = 0.2
    k_max: int = 200
    x: float = 0.0
    y: float = 0.0
    alpha: Optional[str] = None  # rotation number of g; estimated when absent
    precision_bits: int = 128
    seed: int = 0
    perturb_fraction: float = 0.5  # perturbation of g gets this share of eps
    denjoy_fraction: float = 0.25  # wandering-distortion target as a share of eps
    tau: float = 1e-5  # tracked wandering-interval length threshold
    rotation_samples: int = 1000

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.k_max < 2:
            raise ValueError("k_max must be at least 2")

    def budgets(self, M: float):
        """Distortion targets chained by the density argument, for a bound M on dg."""
        return {"affine": self.eps / (24.0 * M), "smoothing": self.eps / (48.0 * M), "M": M}


@dataclass
class PipelineReport:
    passed: bool = False
    failed_stage: Optional[str] = None
    k: Optional[int] = None
    w: Optional[int] = None
    ratio_targets: Optional[list] = None
    ratio_achieved: Optional[list] = None
    stages: dict = field(default_factory=dict)
    final_distance: Optional[list] = None
    attempts: list = field(default_factory=list)
    budgets: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _rotation_alpha(g: CircleDiffeo, cfg: PipelineConfig):
    if cfg.alpha is not None:
        return parse_alpha(cfg.alpha, cfg.precision_bits)
    if isinstance(g, Rotation):
        return parse_alpha(float(g.angle), cfg.precision_bits)
    lo, hi = estimate_rotation_number(g, 100000, cfg.y)
    return parse_alpha(float(0.5 * (lo + hi)) % 1.0, cfg.precision_bits)


def _check_rotation(f, g, cfg):
    n = cfg.rotation_samples
    fl, fh = estimate_rotation_number(f, n, cfg.x)
    gl, gh = estimate_rotation_number(g, n, cfg.y)
    if fh < gl or gh < fl:
        raise RotationMismatch(f"rotation intervals [{fl:.6g}, {fh:.6g}] and [{gl:.6g}, {gh:.6g}] are disjoint")
    return [fl, fh], [gl, gh]


def _attempt(f_work, f, g, h_pre, entry, cfg, x):
    """One characteristic time; returns (h, record) with record["pass"]."""
    k, w = entry.k, entry.w
    rec = {"k": k, "w": w}
    seg_f = analyze(orbit_segment(f_work, x, k))
    seg_g = analyze(orbit_segment(g, cfg.y, k))
    if not (seg_f.adapted and seg_g.adapted):
        rec.update(stage="segment", reason=(seg_f if not seg_f.adapted else seg_g).reason)
        return None, rec
    if not similarly_ordered(seg_f.segment, seg_g.segment):
        rec.update(stage="segment", reason="orbit segments of f and g are ordered differently")
        return None, rec
    rec["ratio_targets"] = [seg_f.R0, seg_f.Rn]
    windows = []
    if abs(seg_g.R0 / seg_f.R0 - 1) < 1e-12 and abs(seg_g.Rn / seg_f.Rn - 1) < 1e-12:
        g1, base = g, cfg.y
        rec["perturbation"] = {"skipped": True}
    else:
        try:
            g1 = perturb_to_ratios(g, cfg.y, k, w, seg_f.R0, seg_f.Rn, cfg.perturb_fraction * cfg.eps)
        except Infeasible as exc:
            rec.update(stage="perturbation", reason=str(exc), needed_w=exc.needed_w)
            return None, rec
        base, windows = g1.base_point, list(g1.plan.windows)
        rec["perturbation"] = dict(g1.report, plan=g1.plan.to_json())
    seg_g1 = analyze(orbit_segment(g1, base, k))
    rec["ratio_achieved"] = [seg_g1.R0, seg_g1.Rn] if seg_g1.adapted else None
    H = build_conjugacy(seg_f, seg_g1)
    affine = conjugacy_derivative_certificate(H, f_work, g1, raise_on_fail=False)
    rec["affine"] = affine.to_json()
    if not affine.passed:
        rec.update(stage="affine", reason="l.affine derivative-ratio certificate failed")
        return None, rec
    phi, f_lin = linearize_near_segment(f_work, seg_f.segment)
    sm = smooth_conjugacy(H, f_lin, phi, raise_on_fail=False)
    rec["smoothing"] = sm.to_json()
    if not sm.passed:
        rec.update(stage="smoothing", reason="smoothing gap certificate failed")
        return None, rec
    parts = [(sm.h, False), (phi, True)] + ([(h_pre, False)] if h_pre is not None else [])
    h = Composed(parts)
    windows += [CircleArc(p - 1e-3, p + 1e-3) for p in seg_g1.segment.points]
    sup, dd = windowed_c1_distance(conjugate(h, f), g, windows)
    rec["final_distance"] = [sup, dd]
    rec["pass"] = bool(sup <= cfg.eps and dd <= cfg.eps)
    if not rec["pass"]:
        rec.update(stage="final", reason=f"final distance ({sup:.3g}, {dd:.3g}) above eps")
    return h, rec


def conjugate_towards(f: CircleDiffeo, g: CircleDiffeo, cfg: PipelineConfig = PipelineConfig()):
    """Search the characteristic times of the rotation number for one at which
    the full construction certifies ``c1_distance(h f h^-1, g) <= eps``."""
    report = PipelineReport(config=asdict(cfg))
    rot_f, rot_g = _check_rotation(f, g, cfg)
    report.stages["rotation"] = {"f": rot_f, "g": rot_g}
    d0 = c1_distance(f, g)
    if max(d0) <= cfg.eps:
        report.passed, report.final_distance = True, list(d0)
        report.stages["identity"] = {"c1_distance": list(d0)}
        return identity(), report

    f_work, h_pre, x = f, None, cfg.x
    try:
        from .denjoy_lab import detect_wandering, reduce_wandering_distortion

        detect_wandering(f, max(cfg.tau, 1e-4))
    except NoWanderingDetected:
        report.stages["denjoy"] = {"wandering": False}
    else:
        try:
            red = reduce_wandering_distortion(f, cfg.denjoy_fraction * cfg.eps, tau=max(cfg.tau, 1e-4))
        except CircleConjugacyError as exc:
            report.failed_stage = "denjoy"
            report.stages["denjoy"] = {"wandering": True, "error": type(exc).__name__, "message": str(exc)}
            return None, report
        f_work, h_pre = red.g, red.h
        x = float(red.locals[0].base.left)  # a wandering-interval endpoint lies in the minimal set
        report.stages["denjoy"] = {"wandering": True, "certificate": red.certificate,
                                   "tracked": len(red.tracked), "base_point": x}

    alpha = _rotation_alpha(g, cfg)
    M = max_derivative(g)
    report.budgets = cfg.budgets(M)
    sched = characteristic_times(alpha, cfg.k_max)
    for entry in sched.adapted_entries():
        if entry.k < 2:
            continue
        try:
            h, rec = _attempt(f_work, f, g, h_pre, entry, cfg, x)
        except CircleConjugacyError as exc:
            h, rec = None, {"k": entry.k, "w": entry.w, "stage": "error",
                            "reason": f"{type(exc).__name__}: {exc}"}
        report.attempts.append(rec)
        if rec.get("pass"):
            report.passed = True
            report.k, report.w = rec["k"], rec["w"]
            report.ratio_targets, report.ratio_achieved = rec["ratio_targets"], rec["ratio_achieved"]
            for key in ("perturbation", "affine", "smoothing"):
                report.stages[key] = rec[key]
            report.final_distance = rec["final_distance"]
            return h, report
    report.failed_stage = report.attempts[-1].get("stage", "schedule") if report.attempts else "schedule"
    exc = BudgetExhausted(f"no adapted characteristic time k <= {cfg.k_max} reached eps = {cfg.eps}")
    exc.report = report
    raise exc


def derivative_samples(h: CircleDiffeo, f: CircleDiffeo, g: CircleDiffeo, n=1000):
    """Rows (x, d(h f h^-1)(x), dg(x)) on a uniform grid."""
    xs = (np.arange(n) + 0.5) / n
    F = conjugate(h, f)
    return np.column_stack([xs, F.deriv(xs), g.deriv(xs)])


def write_derivative_csv(path, h, f, g, n=1000):
    rows = derivative_samples(h, f, g, n)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "df", "dg"])
        for r in rows:
            wr.writerow([repr(float(v)) for v in r])

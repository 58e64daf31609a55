"""Reference fixtures: smooth conjugates of rotations and ratio-matched rotations."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .adapted_segments import require_adapted, orbit_segment
from .circle_core import CircleDiffeo, ClosedForm, Composed, Rotation, conjugate
from .ratio_perturbation import odds, from_odds, one_step_ratio_map
from .rotation_combinatorics import AlphaRep, golden
from .unit_maps import UnitComposed, UnitIdentity, WindowMap


@dataclass
class ConjugatedRotation:
    alpha: AlphaRep
    h0: CircleDiffeo
    f: CircleDiffeo  # h0 R h0^-1
    g: Rotation


def conjugated_rotation(alpha: AlphaRep = None, c=0.4, family="arnold") -> ConjugatedRotation:
    """``f = h0 R_alpha h0^-1`` with ``h0(x) = x + c/(2 pi) sin(2 pi x)``; for
    ``c <= 1/2`` the derivative of h0 stays in [1/2, 3/2]."""
    alpha = alpha or golden()
    g = Rotation(float(alpha.value))
    h0 = ClosedForm(family, t=0.0, c=c)
    return ConjugatedRotation(alpha, h0, conjugate(h0, g), g)


def odds_path(y: float, q: float, step=0.4):
    """Unit diffeo sending y to the point with odds ``q * odds(y)``, as a product
    of one-step ratio maps each moving the odds by at most ``1 +- step``."""
    if q <= 0:
        raise ValueError("odds factor must be positive")
    if q == 1.0:
        return UnitIdentity()
    grow = math.log1p(step) if q > 1 else -math.log1p(-step)
    n = max(1, math.ceil(abs(math.log(q)) / grow - 1e-12))
    t = (q ** (1.0 / n) - 1.0) / step
    maps, z = [], y
    for _ in range(n):
        m = one_step_ratio_map(t, step, z)
        maps.append(m)
        z = m.y1
    return UnitComposed(list(reversed(maps)))


class RatioMatchedRotation(Composed):
    """``psi R psi^-1`` where psi moves the segment's first and last points inside
    their basic intervals so that the ratios become (R0, Rn)."""

    def __init__(self, rot: Rotation, psi: WindowMap, base_point: float, k: int):
        super().__init__([(psi, False), (rot, False), (psi, True)])
        self.rot, self.psi = rot, psi
        self.base_point = base_point
        self.k = k
        self.smoothness = "C1"


def ratio_matched_rotation(alpha: AlphaRep, k: int, R0: float, Rn: float, y=0.0,
                           step=0.4) -> RatioMatchedRotation:
    rot = Rotation(float(alpha.value))
    seg = require_adapted(orbit_segment(rot, y, k))
    windows = []
    for left, right, R_old, R_new in ((seg.a, seg.b, seg.R0, R0), (seg.c, seg.d, seg.Rn, Rn)):
        L = (right - left) % 1.0
        psi = odds_path(from_odds(R_old), R_new / R_old, step)
        windows.append((left, L, psi))
    psi = WindowMap(windows)
    base = float(psi.lift(y)) % 1.0
    return RatioMatchedRotation(rot, psi, base, k)

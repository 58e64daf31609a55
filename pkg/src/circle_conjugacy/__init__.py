"""Smooth conjugacy classes of circle diffeomorphisms with irrational rotation number."""
from .circle_core import (CircleArc, CircleDiffeo, ClosedForm, Composed, PWAffine, Rotation, c1_distance,
                          conjugate, distortion, estimate_rotation_number)
from .errors import CircleConjugacyError
from .rotation_combinatorics import AlphaRep, characteristic_times, golden

__all__ = [
    "AlphaRep", "CircleArc", "CircleConjugacyError", "CircleDiffeo", "ClosedForm", "Composed", "PWAffine",
    "Rotation", "c1_distance", "characteristic_times", "conjugate", "distortion", "estimate_rotation_number",
    "golden",
]
__version__ = "0.1.0"

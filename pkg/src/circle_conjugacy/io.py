"""JSON map specs and report serialization."""
from __future__ import annotations

import json
from pathlib import Path

import mpmath

from .circle_core import Blended, CircleDiffeo, ClosedForm, Composed, PWAffine, Rotation
from .errors import InputError
from .rotation_combinatorics import AlphaRep, alpha_from_cf, alpha_from_string


def parse_alpha(value, precision_bits=128) -> AlphaRep:
    """Decimal string, number, CF term list, or ``{"value": ..., "continued_fraction": ...}``."""
    if isinstance(value, AlphaRep):
        return value
    if isinstance(value, dict):
        if value.get("continued_fraction"):
            return alpha_from_cf(value["continued_fraction"], value.get("precision_bits", precision_bits))
        return parse_alpha(value["value"], value.get("precision_bits", precision_bits))
    if isinstance(value, (list, tuple)):
        return alpha_from_cf([int(t) for t in value], precision_bits)
    if isinstance(value, float):
        # the exact binary value of the float
        with mpmath.workprec(precision_bits + 16):
            return AlphaRep(mpmath.mpf(value), precision_bits)
    try:
        return alpha_from_string(str(value), precision_bits)
    except (ValueError, TypeError) as exc:
        raise InputError(f"cannot parse rotation number {value!r}") from exc


def map_from_json(spec) -> CircleDiffeo:
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("map spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "rotation":
            return Rotation(float(spec["angle"]))
        if kind == "closed_form":
            extra = set(spec) - {"type", "family", "params"}
            if extra:
                raise InputError(f"closed_form parameters belong under 'params', got {sorted(extra)}")
            return ClosedForm(spec["family"], **spec.get("params", {}))
        if kind == "pw_affine":
            return PWAffine(spec["breakpoints"], spec["images"], spec.get("radii"))
        if kind == "blended":
            host = map_from_json(spec["host"])
            return Blended(host, [(p["center"], p["eta"]) for p in spec["pieces"]])
        if kind == "composed":
            return Composed([(map_from_json(p["map"]), bool(p.get("inverse", False))) for p in spec["parts"]])
        if kind == "denjoy":
            from .denjoy_lab import build_denjoy

            return build_denjoy(denjoy_spec_from_json(spec.get("spec", spec)))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad {kind} map spec: {exc}") from exc
    raise InputError(f"unknown map type {kind!r}")


def denjoy_spec_from_json(spec):
    from .denjoy_lab import DenjoySpec

    try:
        law = spec.get("length_law", {"family": "inverse_square"})
        return DenjoySpec(parse_alpha(spec["alpha"]), float(spec.get("total", 0.5)),
                          int(spec.get("n_trunc", 200)), law=law.get("family", "inverse_square"))
    except KeyError as exc:
        raise InputError(f"denjoy spec misses {exc}") from exc


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def load_map(path) -> CircleDiffeo:
    return map_from_json(load_json(path))


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest float repr."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default)


def _default(o):
    import numpy as np

    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")

"""JSON and CSV views of regions and band summaries.

Numbers are written with 12 significant digits; infinite photon numbers
are stored as the strings "inf" / "-inf".
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .region import BoundaryVertex, ConvexRegion, RateRegion

DIGITS = 12


def _num(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return None
    r = float(f"{x:.{DIGITS}g}")
    return 0.0 if r == 0 else r


def _unnum(x):
    if x is None:
        return float("nan")
    if isinstance(x, str):
        return float(x)
    return float(x)


def canonical(obj):
    """Recursively round floats and make the object JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(canonical(obj), indent=2, sort_keys=True) + "\n"


def region_to_json(region: RateRegion) -> dict:
    return canonical(region.to_json())


def region_from_json(obj: dict) -> RateRegion:
    """Rebuild a region (boundary and hull; sample points are not stored)."""
    boundary = []
    for v in obj["boundary"]:
        boundary.append(BoundaryVertex(
            I1=_unnum(v["I1"]), I2=_unnum(v["I2"]), label=v["label"],
            params={k: _unnum(x) for k, x in v.get("params", {}).items()},
            segment=v.get("segment")))
    hull = ConvexRegion(np.array([[_unnum(a), _unnum(b)] for a, b in obj["hull"]]).reshape(-1, 2))
    pts = np.array([[b.I1, b.I2] for b in boundary]).reshape(-1, 2)
    return RateRegion(pts, boundary, hull)


def region_to_csv(region: RateRegion) -> str:
    """One boundary vertex per row; parameter columns are the union of keys."""
    keys = sorted({k for v in region.boundary for k in v.params})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["I1", "I2", "label", "segment"] + keys)
    for v in region.boundary:
        row = [_num(v.I1), _num(v.I2), v.label, v.segment or ""]
        row += [_num(v.params[k]) if k in v.params else "" for k in keys]
        w.writerow(["" if x is None else repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def regions_equal(a: RateRegion, b: RateRegion, tol: float = 1e-12) -> bool:
    """Boundary and hull agree to relative tolerance ``tol``."""
    def close(x, y):
        if math.isinf(x) or math.isinf(y):
            return x == y
        return abs(x - y) <= tol * max(1.0, abs(x), abs(y))

    if len(a.boundary) != len(b.boundary) or a.hull.vertices.shape != b.hull.vertices.shape:
        return False
    for u, v in zip(a.boundary, b.boundary):
        if u.label != v.label or u.segment != v.segment or set(u.params) != set(v.params):
            return False
        if not (close(u.I1, v.I1) and close(u.I2, v.I2)):
            return False
        if not all(close(u.params[k], v.params[k]) for k in u.params):
            return False
    return all(close(x, y) for x, y in zip(a.hull.vertices.ravel(), b.hull.vertices.ravel()))


def canonical_region(region: RateRegion) -> RateRegion:
    """The region exactly as it is written to disk (12 significant digits)."""
    return region_from_json(json.loads(dumps(region_to_json(region))))

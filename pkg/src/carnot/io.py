"""File formats: JSON spec files and plan documents, CSV measures.

CSV columns follow the coordinate layout: ``x0_1..x0_m``, ``b1_1, b1_2, ...,
bd_1, bd_2``, ``z`` and an optional weight column ``w``.  Floats are written
with ``repr`` so a write/read round trip is exact.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .distance import CutClass
from .group import GroupSpec, LayoutError, make_spec
from .transport import DiscreteMeasure, TransportPlan


class FormatError(ValueError):
    """Malformed input file."""


def coordinate_names(spec: GroupSpec):
    names = [f"x0_{i + 1}" for i in range(spec.m)]
    for i in range(spec.d):
        names += [f"b{i + 1}_1", f"b{i + 1}_2"]
    return names + ["z"]


def spec_from_dict(data):
    try:
        return make_spec(int(data["kernel_dim"]), [float(a) for a in data["alphas"]])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"spec document needs 'kernel_dim' and 'alphas': {exc}") from None


def read_spec(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"spec file {path} is not valid JSON: {exc}") from None
    return spec_from_dict(data)


def write_spec(spec: GroupSpec, path):
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def write_points(spec: GroupSpec, path, points, weights=None, extra=None):
    """Write points (and optional weights or leading extra columns) as CSV."""
    pts = np.atleast_2d(spec.check(points))
    header = list(extra.keys()) if extra else []
    header += coordinate_names(spec)
    if weights is not None:
        header.append("w")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, row in enumerate(pts):
            vals = [repr(float(extra[k][i])) for k in extra] if extra else []
            vals += [repr(float(v)) for v in row]
            if weights is not None:
                vals.append(repr(float(weights[i])))
            writer.writerow(vals)


def read_points(spec: GroupSpec, path):
    """(points, weights or None) from a CSV in the coordinate layout."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    header = [h.strip() for h in rows[0]]
    names = coordinate_names(spec)
    missing = [n for n in names if n not in header]
    if missing:
        raise LayoutError(f"{path}: columns {missing} missing for spec {spec.to_dict()}")
    extra = [h for h in header if h not in names and h != "w"]
    if extra:
        raise LayoutError(f"{path}: unexpected columns {extra} for spec {spec.to_dict()}")
    cols = [header.index(n) for n in names]
    try:
        body = np.array([[float(r[c]) for c in cols] for r in rows[1:]], dtype=float).reshape(-1, len(names))
        w = np.array([float(r[header.index("w")]) for r in rows[1:]]) if "w" in header else None
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed row: {exc}") from None
    if not np.all(np.isfinite(body)):
        raise FormatError(f"{path}: non-finite coordinate")
    return body, w


def write_measure(spec: GroupSpec, path, mu: DiscreteMeasure):
    write_points(spec, path, mu.points, mu.weights)


def read_measure(spec: GroupSpec, path):
    pts, w = read_points(spec, path)
    if len(pts) == 0:
        raise FormatError(f"{path}: measure has no points")
    if w is None:
        return DiscreteMeasure.uniform(pts)
    try:
        return DiscreteMeasure(pts, w)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def plan_to_dict(spec: GroupSpec, plan: TransportPlan):
    """Plan document: matched pairs with their covectors, plus the cost and dual potentials."""
    pairs = [
        {
            "i": int(i),
            "j": int(j),
            "mass": float(m),
            "theta": th.tolist(),
            "cls": CutClass(int(c)).label,
            "moving": bool(mv),
        }
        for i, j, m, th, c, mv in zip(plan.src, plan.tgt, plan.mass, plan.theta, plan.cls, plan.moving)
    ]
    return {
        "spec": spec.to_dict(),
        "solver": plan.solver,
        "cost": plan.cost,
        "dual_value": plan.dual_value,
        "duals": {"phi": plan.phi.tolist(), "phi_c": plan.phi_c.tolist()},
        "pairs": pairs,
    }


_LABELS = {c.label: int(c) for c in CutClass}


def plan_from_dict(data):
    try:
        pairs = data["pairs"]
        dim = len(pairs[0]["theta"]) if pairs else 0
        return TransportPlan(
            src=np.array([p["i"] for p in pairs], dtype=np.int64),
            tgt=np.array([p["j"] for p in pairs], dtype=np.int64),
            mass=np.array([p["mass"] for p in pairs], dtype=float),
            cost=float(data["cost"]),
            phi=np.asarray(data["duals"]["phi"], dtype=float),
            phi_c=np.asarray(data["duals"]["phi_c"], dtype=float),
            theta=np.array([p["theta"] for p in pairs], dtype=float).reshape(-1, dim),
            cls=np.array([_LABELS[p["cls"]] for p in pairs], dtype=np.int64),
            moving=np.array([p["moving"] for p in pairs], dtype=bool),
            dual_value=float(data.get("dual_value", 0.0)),
            solver=str(data.get("solver", "assignment")),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise FormatError(f"malformed plan document: {exc!r}") from None


def write_plan(spec: GroupSpec, path, plan: TransportPlan):
    Path(path).write_text(json.dumps(plan_to_dict(spec, plan)) + "\n")


def read_plan(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"plan file {path} is not valid JSON: {exc}") from None
    return spec_from_dict(data["spec"]), plan_from_dict(data)

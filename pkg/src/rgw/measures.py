"""Discrete measures on R^d and their metric-measure representation.

Measures are finitely supported with nonnegative (not necessarily normalized)
weights.  Duplicate support points are allowed and never merged silently;
total-variation arithmetic merges them on the fly.  All operations are pure:
inputs are never mutated and the stored arrays are read-only.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "MMSpace",
    "tv_distance",
    "measure_min",
    "normalize",
    "apply_isometry",
    "scale_points",
    "point_mass",
    "random_rotation",
    "load_measure",
    "save_measure",
]

PROB_ATOL = 1e-12


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class DiscreteMeasure:
    """Finitely supported measure: support points plus nonnegative weights.

    Parameters
    ----------
    points : array-like, shape (n, d) or (n,)
        Support points; a 1-d array is taken as n points on the real line.
    weights : array-like, shape (n,)
        Nonnegative masses, stored as given (no normalization).
    """

    __slots__ = ("points", "weights")

    def __init__(self, points, weights):
        pts = np.array(points, dtype=np.float64, order="C")
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array of shape (n, d)")
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] != pts.shape[0]:
            raise ValueError("weights must be 1-d with one entry per point")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("points and weights must be finite")
        if w.size and w.min() < 0:
            raise ValueError("weights must be nonnegative")
        pts += 0.0  # canonicalize -0.0 so exact-equality merging behaves
        self.points = _freeze(pts)
        self.weights = _freeze(w)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.weights))

    @property
    def is_probability(self) -> bool:
        return abs(self.total_mass - 1.0) <= PROB_ATOL

    def merged(self) -> "DiscreteMeasure":
        """Canonical form: duplicate points merged, rows in lexicographic order."""
        pts, w = _merge_rows(self.points, self.weights)
        return DiscreteMeasure(pts, w)

    def equals(self, other: "DiscreteMeasure", atol: float = 0.0) -> bool:
        """Equality as measures, i.e. after merging duplicates."""
        if self.dim != other.dim:
            return False
        return tv_distance(self, other) <= atol

    def __repr__(self):  # pragma: no cover
        return f"DiscreteMeasure(n={self.size}, dim={self.dim}, mass={self.total_mass:.6g})"


def _merge_rows(pts: np.ndarray, w: np.ndarray):
    """Sum weights over exactly-equal rows; rows returned in lexicographic order."""
    if pts.shape[0] == 0:
        return pts.copy(), w.copy()
    order = np.lexsort(pts.T[::-1])
    sp, sw = pts[order], w[order]
    new_group = np.r_[True, np.any(sp[1:] != sp[:-1], axis=1)]
    starts = np.flatnonzero(new_group)
    return sp[starts], np.add.reduceat(sw, starts)


def _check_same_dim(a: DiscreteMeasure, b: DiscreteMeasure):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def tv_distance(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """Total-variation distance (1/2)*sum_z |a({z}) - b({z})| over merged atoms."""
    _check_same_dim(a, b)
    pts = np.vstack([a.points, b.points])
    signed = np.concatenate([a.weights, -b.weights])
    _, sums = _merge_rows(pts, signed)
    return 0.5 * float(np.abs(sums).sum())


def measure_min(a: DiscreteMeasure, b: DiscreteMeasure) -> DiscreteMeasure:
    """Atomwise minimum a ^ b on the intersection of the merged supports."""
    _check_same_dim(a, b)
    am, bm = a.merged(), b.merged()
    pts = np.vstack([am.points, bm.points])
    side = np.concatenate([np.zeros(am.size), np.ones(bm.size)])
    vals = np.concatenate([am.weights, bm.weights])
    order = np.lexsort(pts.T[::-1])
    sp, ss, sv = pts[order], side[order], vals[order]
    keep_pts, keep_w = [], []
    i = 0
    while i < sp.shape[0]:
        j = i + 1
        while j < sp.shape[0] and np.array_equal(sp[j], sp[i]):
            j += 1
        if j - i == 2:  # atom present in both merged supports
            keep_pts.append(sp[i])
            keep_w.append(min(sv[i], sv[j - 1]) if ss[i] != ss[j - 1] else 0.0)
        i = j
    if not keep_pts:
        return DiscreteMeasure(np.zeros((0, a.dim)), np.zeros(0))
    return DiscreteMeasure(np.array(keep_pts), np.array(keep_w))


def normalize(a: DiscreteMeasure) -> DiscreteMeasure:
    """Rescale weights to total mass 1; the final sum is within 1e-15 of 1."""
    mass = math.fsum(a.weights)
    if mass <= 0.0:
        raise ValueError("cannot normalize a measure with zero total mass")
    w = a.weights / mass
    for _ in range(3):
        s = math.fsum(w)
        if abs(s - 1.0) <= 1e-16:
            break
        w = w / s
    return DiscreteMeasure(a.points, w)


def apply_isometry(a: DiscreteMeasure, rotation, shift) -> DiscreteMeasure:
    """Pushforward under x -> R x + shift for an orthogonal matrix R."""
    rot = np.asarray(rotation, dtype=np.float64)
    sh = np.asarray(shift, dtype=np.float64).reshape(-1)
    if rot.shape != (a.dim, a.dim) or sh.shape != (a.dim,):
        raise ValueError("rotation/shift dimensions do not match the measure")
    defect = np.max(np.abs(rot.T @ rot - np.eye(a.dim)))
    if defect > 1e-10:
        raise ValueError(f"rotation is not orthogonal (max |R^T R - I| = {defect:.3g})")
    return DiscreteMeasure(a.points @ rot.T + sh, a.weights)


def scale_points(a: DiscreteMeasure, factor: float) -> DiscreteMeasure:
    """Dilate all support points by ``factor`` (weights unchanged)."""
    return DiscreteMeasure(a.points * float(factor), a.weights)


def point_mass(point, dim: int | None = None) -> DiscreteMeasure:
    pt = np.atleast_1d(np.asarray(point, dtype=np.float64))
    if dim is not None and pt.shape != (dim,):
        raise ValueError("point has wrong dimension")
    return DiscreteMeasure(pt.reshape(1, -1), [1.0])


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign correction."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


class MMSpace:
    """A discrete measure together with its pairwise squared-distance matrix."""

    __slots__ = ("measure", "cost")

    def __init__(self, measure: DiscreteMeasure, cost):
        c = np.array(cost, dtype=np.float64, order="C")
        n = measure.size
        if c.shape != (n, n):
            raise ValueError("cost matrix size does not match support size")
        scale = max(1.0, float(np.max(np.abs(c))) if c.size else 0.0)
        if np.max(np.abs(c - c.T), initial=0.0) > 1e-12 * scale:
            raise ValueError("cost matrix must be symmetric")
        if np.max(np.abs(np.diag(c)), initial=0.0) > 1e-12 * scale:
            raise ValueError("cost matrix must have zero diagonal")
        if c.size and c.min() < -1e-12 * scale:
            raise ValueError("cost matrix must be nonnegative")
        c = 0.5 * (c + c.T)
        np.fill_diagonal(c, 0.0)
        np.clip(c, 0.0, None, out=c)
        self.measure = measure
        self.cost = _freeze(c)

    @classmethod
    def from_points(cls, measure: DiscreteMeasure) -> "MMSpace":
        """Build the squared-Euclidean cost matrix from the support points."""
        diff = measure.points[:, None, :] - measure.points[None, :, :]
        return cls(measure, np.einsum("ikd,ikd->ik", diff, diff))

    @property
    def size(self) -> int:
        return self.measure.size

    @property
    def weights(self) -> np.ndarray:
        return self.measure.weights

    def merged(self) -> "MMSpace":
        return MMSpace.from_points(self.measure.merged())

    def __repr__(self):  # pragma: no cover
        return f"MMSpace(n={self.size}, dim={self.measure.dim})"


def save_measure(measure: DiscreteMeasure, path) -> None:
    """Write a measure to ``path`` (.json or .csv); weights round-trip bit-exactly."""
    path = Path(path)
    if path.suffix == ".json":
        doc = {
            "dim": measure.dim,
            "points": measure.points.tolist(),
            "weights": measure.weights.tolist(),
        }
        path.write_text(json.dumps(doc) + "\n")
    elif path.suffix == ".csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i}" for i in range(measure.dim)] + ["weight"])
            for pt, w in zip(measure.points, measure.weights):
                writer.writerow([repr(float(v)) for v in pt] + [repr(float(w))])
    else:
        raise ValueError(f"unsupported measure format: {path.suffix!r}")


def load_measure(path) -> DiscreteMeasure:
    """Read a measure written by :func:`save_measure` (JSON or CSV)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        if not isinstance(doc, dict) or set(doc) != {"dim", "points", "weights"}:
            raise ValueError("measure JSON must have exactly keys dim/points/weights")
        pts = np.asarray(doc["points"], dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, int(doc["dim"]))
        pts = pts.reshape(len(doc["points"]), -1)
        if pts.shape[1] != int(doc["dim"]):
            raise ValueError("point dimension does not match declared dim")
        return DiscreteMeasure(pts, doc["weights"])
    if path.suffix == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or not rows[0] or rows[0][-1].strip() != "weight":
            raise ValueError("measure CSV needs a header ending in 'weight'")
        d = len(rows[0]) - 1
        body = [r for r in rows[1:] if r]
        pts = np.array([[float(v) for v in r[:d]] for r in body], dtype=np.float64)
        w = np.array([float(r[d]) for r in body], dtype=np.float64)
        return DiscreteMeasure(pts.reshape(len(body), d), w)
    raise ValueError(f"unsupported measure format: {path.suffix!r}")

"""Shared data model, distance functions, and kernel functions.

Points are stored as numpy arrays: real feature vectors as float64 rows,
bit vectors as uint8 rows of 0/1.  Every dataset carries one random
priority per point, drawn once at construction from a caller-supplied
generator; all downstream tie-breaks compare (distance, priority, index)
lexicographically so that orderings are total and reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

REAL = "real"
BITS = "bits"

_KERNEL_VARIANTS = ("naive", "gaussian", "truncated_gaussian")


@dataclass(frozen=True)
class NeighborHit:
    """One search result: training index, distance to query, tie-break priority."""

    index: int
    distance: float
    priority: float

    def key(self):
        return (self.distance, self.priority, self.index)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice for regression/classification.

    variant: "naive" (indicator of normalized distance <= 1), "gaussian"
    (exp(-s^2/2)), or "truncated_gaussian" (gaussian zeroed beyond tau).
    bandwidth: the normalizing distance h > 0.
    """

    variant: str
    bandwidth: float
    tau: Optional[float] = None

    def __post_init__(self):
        if self.variant not in _KERNEL_VARIANTS:
            raise ValueError(f"unknown kernel variant: {self.variant!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.variant == "truncated_gaussian":
            if self.tau is None or not self.tau > 0:
                raise ValueError("truncated_gaussian requires tau > 0")


def kernel_eval(spec: KernelSpec, s):
    """Evaluate the kernel at normalized distance(s) s >= 0.

    Returns values in [0, 1], monotonically nonincreasing in s.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("normalized distance must be nonnegative")
    if spec.variant == "naive":
        out = (s <= 1.0).astype(float)
    elif spec.variant == "gaussian":
        out = np.exp(-0.5 * s * s)
    else:
        out = np.exp(-0.5 * s * s) * (s <= spec.tau)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class LabeledDataset:
    """Homogeneous point set with optional labels and fixed tie-break priorities."""

    points: np.ndarray
    priorities: np.ndarray
    labels: Optional[np.ndarray] = None
    kind: str = REAL

    def __post_init__(self):
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must be a (n, d) array with d >= 1")
        if self.kind == REAL and not np.all(np.isfinite(pts)):
            raise ValueError("real vectors must have finite components")
        if self.kind == BITS and not np.isin(pts, (0, 1)).all():
            raise ValueError("bit vectors must contain only 0/1")
        if len(self.priorities) != len(pts):
            raise ValueError("one priority per point required")
        if self.labels is not None and len(self.labels) != len(pts):
            raise ValueError("labels and points must have equal length")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points, labels=None, rng: Optional[np.random.Generator] = None,
                    priorities=None) -> "LabeledDataset":
        """Real-vector dataset; priorities drawn from rng unless given explicitly."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(pts, _make_priorities(len(pts), rng, priorities),
                   _as_labels(labels), REAL)

    @classmethod
    def from_bits(cls, points, labels=None, rng: Optional[np.random.Generator] = None,
                  priorities=None) -> "LabeledDataset":
        """Bit-vector dataset over {0,1}^d."""
        pts = np.asarray(points, dtype=np.uint8)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(pts, _make_priorities(len(pts), rng, priorities),
                   _as_labels(labels), BITS)

    def distances_to(self, q) -> np.ndarray:
        """Vectorized distance from every point to query q (euclidean or hamming)."""
        q = np.asarray(q)
        if q.shape != (self.dim,):
            raise ValueError(f"query dimension {q.shape} != dataset dimension ({self.dim},)")
        if self.kind == BITS:
            return (self.points != q).sum(axis=1).astype(float)
        diff = self.points - q
        return np.sqrt((diff * diff).sum(axis=1))


def _make_priorities(n, rng, priorities):
    if priorities is not None:
        pr = np.asarray(priorities, dtype=float)
        if pr.shape != (n,):
            raise ValueError("priorities must be one per point")
        return pr
    if rng is None:
        rng = np.random.default_rng(0)
    return rng.uniform(0.0, 1.0, n)


def _as_labels(labels):
    if labels is None:
        return None
    return np.asarray(labels, dtype=float)


def rank_neighbors(distances: np.ndarray, priorities: np.ndarray) -> np.ndarray:
    """Indices sorted by the total tie-break order (distance, priority, index)."""
    n = len(distances)
    return np.lexsort((np.arange(n), priorities, distances))


def hits_from_order(order, distances, priorities) -> list:
    return [NeighborHit(int(i), float(distances[i]), float(priorities[i])) for i in order]


def euclidean(a, b) -> float:
    """Euclidean distance between two equal-dimension real vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


def hamming(a, b) -> int:
    """Number of differing positions between two equal-dimension bit vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return int((a != b).sum())


@dataclass(frozen=True)
class TimeSeries:
    """Dense real sequence with an explicit time origin.

    values[i] is the observation at time step start + i, so series may be
    indexed at negative or shifted steps as long as they stay in range.
    """

    values: np.ndarray
    start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def end(self) -> int:
        """Last observable time step (inclusive)."""
        return self.start + len(self.values) - 1

    def window(self, t0: int, t1: int) -> np.ndarray:
        """Values at steps t0..t1 inclusive."""
        if t0 < self.start or t1 > self.end:
            raise ValueError(
                f"steps {t0}..{t1} outside observable range {self.start}..{self.end}")
        lo = t0 - self.start
        return self.values[lo:lo + (t1 - t0 + 1)]


def shift_min_distance(x: TimeSeries, xp: TimeSeries, T: int, dmax: int) -> float:
    """Smallest Euclidean distance over steps 1..T between x and xp advanced
    by any shift in {-dmax, ..., dmax}.

    Advancing by delta means comparing x(t) with xp(t + delta).  Not symmetric
    in its arguments: the window 1..T is always taken on x.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if dmax < 0:
        raise ValueError("dmax must be >= 0")
    xw = x.window(1, T)
    if xp.start > 1 - dmax or xp.end < T + dmax:
        raise ValueError(
            f"x' observable on {xp.start}..{xp.end}, need {1 - dmax}..{T + dmax}")
    best = np.inf
    for delta in range(-dmax, dmax + 1):
        diff = xw - xp.window(1 + delta, T + delta)
        best = min(best, float(np.sqrt(np.dot(diff, diff))))
    return best


def cosine_dist_ratings(yu, yv, support) -> float:
    """Cosine distance between two {-1,0,+1} rating vectors over a common
    item support: 1 - <yu, yv>_support / |support|, in [0, 2]."""
    yu = np.asarray(yu)
    yv = np.asarray(yv)
    support = np.asarray(support)
    if support.dtype == bool:
        support = np.flatnonzero(support)
    if len(support) == 0:
        raise ValueError("no comparable items: empty support")
    dot = float((yu[support] * yv[support]).sum())
    return 1.0 - dot / len(support)

"""Brute-force search, fixed-radius search, and the k-d tree.

The k-d tree splits on coordinates rotating with depth, at the median
value of the split coordinate; points equal to the split value go right.
Queries run either exact (backtracking with a plane-distance prune) or
defeatist (answer from the single leaf the query reaches).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .core import LabeledDataset, NeighborHit, hits_from_order, rank_neighbors

EXACT = "exact"
DEFEATIST = "defeatist"


def brute_force_knn(ds: LabeledDataset, q, k: int) -> List[NeighborHit]:
    """The k closest points by (distance, priority, index), sorted ascending."""
    if not 1 <= k <= ds.n:
        raise ValueError(f"k={k} outside 1..{ds.n}")
    dist = ds.distances_to(q)
    order = rank_neighbors(dist, ds.priorities)[:k]
    return hits_from_order(order, dist, ds.priorities)


def fixed_radius_search(ds: LabeledDataset, q, h: float) -> List[NeighborHit]:
    """All points within distance h of q, sorted; may be empty."""
    if not h > 0:
        raise ValueError("h must be positive")
    dist = ds.distances_to(q)
    order = rank_neighbors(dist, ds.priorities)
    order = order[dist[order] <= h]
    return hits_from_order(order, dist, ds.priorities)


@dataclass
class _Leaf:
    ids: np.ndarray


@dataclass
class _Split:
    axis: int
    value: float
    left: object
    right: object


@dataclass
class KdTree:
    root: object
    n0: int
    dataset: LabeledDataset

    @property
    def depth(self) -> int:
        def walk(node):
            if isinstance(node, _Leaf):
                return 0
            return 1 + max(walk(node.left), walk(node.right))
        return walk(self.root)

    def leaves(self) -> List[np.ndarray]:
        out = []

        def walk(node):
            if isinstance(node, _Leaf):
                out.append(node.ids)
            else:
                walk(node.left)
                walk(node.right)
        walk(self.root)
        return out


def _split_ids(values: np.ndarray, ids: np.ndarray):
    """Median split of ids by values; None when all values are equal.

    The threshold is the m//2-th order statistic so an even count halves
    exactly; if more than half the values tie at the minimum, the threshold
    advances to the next distinct value so both sides stay nonempty.
    """
    order = np.argsort(values, kind="stable")
    svals = values[order]
    thr = svals[len(svals) // 2]
    if thr == svals[0]:
        bigger = svals[svals > thr]
        if len(bigger) == 0:
            return None
        thr = bigger[0]
    mask = values < thr
    return float(thr), ids[mask], ids[~mask]


def build_kdtree(ds: LabeledDataset, n0: int) -> KdTree:
    """Build a k-d tree over a real-vector dataset with leaf capacity n0."""
    if ds.n < 1:
        raise ValueError("empty dataset")
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    pts = ds.points
    d = ds.dim

    def build(ids: np.ndarray, depth: int):
        if len(ids) <= n0:
            return _Leaf(ids)
        for probe in range(d):
            axis = (depth + probe) % d
            split = _split_ids(pts[ids, axis], ids)
            if split is not None:
                thr, left_ids, right_ids = split
                return _Split(axis, thr,
                              build(left_ids, depth + 1),
                              build(right_ids, depth + 1))
        # every coordinate constant: exact duplicates, keep as one leaf
        return _Leaf(ids)

    return KdTree(build(np.arange(ds.n), 0), n0, ds)


def _descend_leaf(tree: KdTree, q) -> _Leaf:
    node = tree.root
    while isinstance(node, _Split):
        node = node.left if q[node.axis] < node.value else node.right
    return node


def _best_in_ids(ds: LabeledDataset, ids: np.ndarray, q, k: int) -> List[NeighborHit]:
    sub = ds.points[ids]
    if ds.kind == "bits":
        dist = (sub != np.asarray(q)).sum(axis=1).astype(float)
    else:
        diff = sub - np.asarray(q, dtype=float)
        dist = np.sqrt((diff * diff).sum(axis=1))
    pri = ds.priorities[ids]
    order = np.lexsort((ids, pri, dist))[:k]
    return [NeighborHit(int(ids[i]), float(dist[i]), float(pri[i])) for i in order]


def kdtree_knn(tree: KdTree, q, k: int, mode: str = EXACT) -> List[NeighborHit]:
    """k nearest neighbors from the tree.

    exact mode matches brute_force_knn; defeatist mode returns the best
    hits from the single leaf containing q (possibly fewer than k).
    """
    ds = tree.dataset
    q = np.asarray(q, dtype=float)
    if mode == DEFEATIST:
        leaf = _descend_leaf(tree, q)
        return _best_in_ids(ds, leaf.ids, q, k)
    if mode != EXACT:
        raise ValueError(f"unknown query mode: {mode!r}")
    if not 1 <= k <= ds.n:
        raise ValueError(f"k={k} outside 1..{ds.n}")

    pts = ds.points
    pri = ds.priorities
    # max-heap of the current k best, keyed by negated (distance, priority, index)
    heap: list = []

    def consider(i: int):
        d = q - pts[i]
        # same accumulation order as LabeledDataset.distances_to, so exact
        # mode reproduces brute-force distances bit for bit
        key = (float(np.sqrt((d * d).sum())), float(pri[i]), int(i))
        if len(heap) < k:
            heapq.heappush(heap, tuple(-v for v in key))
        elif key < tuple(-v for v in heap[0]):
            heapq.heapreplace(heap, tuple(-v for v in key))

    def worst_distance() -> float:
        return -heap[0][0]

    def search(node):
        if isinstance(node, _Leaf):
            for i in node.ids:
                consider(int(i))
            return
        plane = q[node.axis] - node.value
        near, far = (node.left, node.right) if plane < 0 else (node.right, node.left)
        search(near)
        # a far-side point can still win a distance tie by priority, so prune
        # only when the plane is strictly farther than the current worst
        if len(heap) < k or abs(plane) <= worst_distance():
            search(far)

    search(tree.root)
    out = sorted((-a, -b, int(-c)) for a, b, c in heap)
    return [NeighborHit(i, d, p) for d, p, i in out]

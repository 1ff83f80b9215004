"""Random projection trees and forests with defeatist querying.

Internal nodes project onto a Gaussian direction (components N(0, 1/d),
not normalized) and split at the median projection; ties at the split go
right, mirroring the k-d tree rule.  Forest queries merge per-tree
defeatist candidates.  potential_phi is the query-difficulty diagnostic:
the average ratio of the nearest distance to all other distances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .core import LabeledDataset, NeighborHit
from .exact import _Leaf, _best_in_ids, _split_ids


@dataclass
class _RpSplit:
    direction: np.ndarray
    threshold: float
    left: object
    right: object


@dataclass
class RpTree:
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


@dataclass
class RpForest:
    trees: List[RpTree]

    @property
    def dataset(self) -> LabeledDataset:
        return self.trees[0].dataset


def build_rp_tree(ds: LabeledDataset, n0: int, rng: np.random.Generator) -> RpTree:
    """Recursive median splits on fresh random directions down to leaves <= n0."""
    if ds.n < 1:
        raise ValueError("empty dataset")
    if n0 < 1:
        raise ValueError("n0 must be >= 1")
    pts = ds.points
    d = ds.dim
    scale = 1.0 / np.sqrt(d)

    def build(ids: np.ndarray):
        if len(ids) <= n0:
            return _Leaf(ids)
        v = rng.normal(0.0, scale, d)
        split = _split_ids(pts[ids] @ v, ids)
        if split is None:
            # identical projections only happen for duplicated points
            return _Leaf(ids)
        thr, left_ids, right_ids = split
        return _RpSplit(v, thr, build(left_ids), build(right_ids))

    return RpTree(build(np.arange(ds.n)), n0, ds)


def build_rp_forest(ds: LabeledDataset, n0: int, n_trees: int,
                    rng: np.random.Generator) -> RpForest:
    """Independently seeded trees over the same dataset."""
    if n_trees < 1:
        raise ValueError("need at least one tree")
    seeds = rng.integers(0, 2**63, size=n_trees)
    return RpForest([build_rp_tree(ds, n0, np.random.default_rng(int(s)))
                     for s in seeds])


def _descend(tree: RpTree, q: np.ndarray) -> np.ndarray:
    node = tree.root
    while not isinstance(node, _Leaf):
        node = node.left if float(node.direction @ q) < node.threshold else node.right
    return node.ids


def rp_defeatist_query(tree: RpTree, q, k: int) -> List[NeighborHit]:
    """Best <= k points of the single leaf reached by projection comparisons."""
    q = np.asarray(q, dtype=float)
    return _best_in_ids(tree.dataset, _descend(tree, q), q, k)


def rp_forest_query(forest: RpForest, q, k: int) -> List[NeighborHit]:
    """Union of per-tree defeatist candidates, deduplicated, best k returned."""
    q = np.asarray(q, dtype=float)
    ids = np.unique(np.concatenate([_descend(t, q) for t in forest.trees]))
    return _best_in_ids(forest.dataset, ids, q, k)


def potential_phi(ds: LabeledDataset, q) -> float:
    """(1/n) * sum over i >= 2 of dist(q, X_(1)) / dist(q, X_(i)).

    Small values mean the nearest neighbor stands out from the rest, making
    defeatist search likely to succeed.  Undefined when q duplicates a
    training point (nearest distance zero).
    """
    if ds.n < 2:
        raise ValueError("potential needs n >= 2")
    dist = np.sort(ds.distances_to(q))
    if dist[0] == 0.0:
        raise ValueError("query coincides with a training point; potential undefined")
    return float(np.sum(dist[0] / dist[1:]) / ds.n)

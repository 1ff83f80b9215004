"""Boundary trees and forests: incremental insert/query for any distance.

A query traverses greedily from the root: at each node, the closest of the
children (plus the node itself, while it still has room for another child)
is chosen; traversal stops when it stays put.  Insertions attach the new
point as a child of the query result, or discard it in classification-edit
mode when the labels agree.  Nodes with a full child list never terminate
the traversal, which keeps child counts within max_children; that rule is
isolated in _may_stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import euclidean

ALWAYS = "always"
CLASSIFICATION_EDIT = "classification_edit"


@dataclass
class BoundaryNode:
    point: np.ndarray
    label: float
    node_id: int
    children: list = field(default_factory=list)


class BoundaryTree:
    """Single boundary tree with a pluggable distance function."""

    def __init__(self, max_children: int = 50,
                 distance: Callable = euclidean):
        if max_children < 1:
            raise ValueError("max_children must be >= 1")
        self.max_children = max_children
        self.distance = distance
        self.root: Optional[BoundaryNode] = None
        self.nodes: List[BoundaryNode] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _may_stop(self, node: BoundaryNode) -> bool:
        # the sole arbiter of the full-child-list traversal rule
        return len(node.children) < self.max_children

    def query_stats(self, q) -> Tuple[BoundaryNode, float, int]:
        """(greedy nearest node, its distance, number of nodes touched)."""
        if self.root is None:
            raise ValueError("empty tree")
        q = np.asarray(q)
        node = self.root
        d_node = self.distance(q, node.point)
        touched = 1
        while True:
            candidates = list(node.children)
            touched += len(candidates)
            best, d_best = None, np.inf
            for ch in candidates:
                d = self.distance(q, ch.point)
                if (d, ch.node_id) < (d_best, -1 if best is None else best.node_id):
                    best, d_best = ch, d
            stoppable = self._may_stop(node)
            if best is None or (stoppable and (d_node, node.node_id) <= (d_best, best.node_id)):
                return node, d_node, touched
            node, d_node = best, d_best

    def query(self, q) -> Tuple[BoundaryNode, float]:
        node, dist, _ = self.query_stats(q)
        return node, dist

    def insert(self, point, label, mode: str = ALWAYS) -> bool:
        """Insert via greedy query; returns True when the point was retained."""
        if mode not in (ALWAYS, CLASSIFICATION_EDIT):
            raise ValueError(f"unknown insert mode: {mode!r}")
        point = np.asarray(point)
        if self.root is None:
            self.root = BoundaryNode(point, label, 0)
            self.nodes.append(self.root)
            return True
        target, _ = self.query(point)
        if mode == CLASSIFICATION_EDIT and target.label == label:
            return False
        child = BoundaryNode(point, label, len(self.nodes))
        target.children.append(child)
        self.nodes.append(child)
        return True

    @property
    def depth(self) -> int:
        if self.root is None:
            return 0

        def walk(node):
            if not node.children:
                return 0
            return 1 + max(walk(c) for c in node.children)
        return walk(self.root)

    def shape_signature(self) -> tuple:
        """Child-count structure in insertion order, for diversity checks."""
        return tuple(len(n.children) for n in self.nodes)


def bt_query(tree: BoundaryTree, q) -> Tuple[BoundaryNode, float]:
    return tree.query(q)


def bt_insert(tree: BoundaryTree, point, label, mode: str = ALWAYS) -> bool:
    return tree.insert(point, label, mode)


class BoundaryForest:
    """Independently ordered boundary trees over one insertion stream."""

    def __init__(self, trees: Sequence[BoundaryTree]):
        if not trees:
            raise ValueError("empty forest")
        self.trees = list(trees)

    @classmethod
    def build(cls, points, labels, n_trees: int, max_children: int = 50,
              mode: str = CLASSIFICATION_EDIT, rng: Optional[np.random.Generator] = None,
              distance: Callable = euclidean, shuffle: bool = True) -> "BoundaryForest":
        """Insert the full stream into each tree under its own permutation."""
        points = np.asarray(points)
        labels = np.asarray(labels, dtype=float)
        rng = rng or np.random.default_rng(0)
        trees = []
        for _ in range(n_trees):
            order = rng.permutation(len(points)) if shuffle else np.arange(len(points))
            tree = BoundaryTree(max_children=max_children, distance=distance)
            for i in order:
                tree.insert(points[i], float(labels[i]), mode)
            trees.append(tree)
        return cls(trees)

    def predict(self, q) -> float:
        """Majority vote of per-tree greedy hits; ties go to the closest hit."""
        hits = [t.query(q) for t in self.trees]
        votes = {}
        for node, dist in hits:
            votes[node.label] = votes.get(node.label, 0) + 1
        top = max(votes.values())
        leaders = [lab for lab, v in votes.items() if v == top]
        if len(leaders) == 1:
            return leaders[0]
        best = min(hits, key=lambda h: (h[1], h[0].node_id))
        return best[0].label

    def regress(self, q) -> float:
        """Mean of per-tree query labels (experimental regression mode)."""
        return float(np.mean([t.query(q)[0].label for t in self.trees]))


def bf_predict(forest: BoundaryForest, q) -> float:
    return forest.predict(q)

"""Nonparametric prediction rules.

k-NN / fixed-radius / kernel regression with the shared empty-neighborhood
convention (estimate 0 when no point gets weight), plug-in classification
thresholded at 1/2 with ties to label 1, the adaptive k*-NN weight solver,
partition/ensemble kernel weights extracted from trees and their bagged or
boosted combinations, and the two-layer proxy-vector estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import KernelSpec, LabeledDataset, kernel_eval, rank_neighbors

BAGGING = "bagging"
BOOSTING = "boosting"


@dataclass(frozen=True)
class RegressionEstimate:
    value: float
    support_size: int
    empty_neighborhood: bool = False


def _require_labels(ds: LabeledDataset):
    if ds.labels is None:
        raise ValueError("dataset has no labels")


def knn_regress(ds: LabeledDataset, q, k: int) -> RegressionEstimate:
    """Mean label of the k nearest neighbors under the tie-break chain."""
    _require_labels(ds)
    if not 1 <= k <= ds.n:
        raise ValueError(f"k={k} outside 1..{ds.n}")
    dist = ds.distances_to(q)
    order = rank_neighbors(dist, ds.priorities)[:k]
    return RegressionEstimate(float(ds.labels[order].mean()), k)


def fixed_radius_regress(ds: LabeledDataset, q, h: float) -> RegressionEstimate:
    """Mean label over points within distance h; (0, empty) when none."""
    _require_labels(ds)
    if not h > 0:
        raise ValueError("h must be positive")
    mask = ds.distances_to(q) <= h
    m = int(mask.sum())
    if m == 0:
        return RegressionEstimate(0.0, 0, empty_neighborhood=True)
    return RegressionEstimate(float(ds.labels[mask].mean()), m)


def kernel_regress(ds: LabeledDataset, q, spec: KernelSpec) -> RegressionEstimate:
    """Nadaraya-Watson estimate sum(K(rho/h) Y) / sum(K(rho/h)).

    The denominator can vanish for compactly supported kernels (or underflow
    for the Gaussian); the estimate is then (0, empty).
    """
    _require_labels(ds)
    weights = kernel_eval(spec, ds.distances_to(q) / spec.bandwidth)
    denom = float(weights.sum())
    support = int((weights > 0).sum())
    if denom <= 0.0:
        return RegressionEstimate(0.0, 0, empty_neighborhood=True)
    return RegressionEstimate(float(np.dot(weights, ds.labels) / denom), support)


def classify(estimate) -> int:
    """Plug-in decision: 1 iff the estimate is >= 1/2, ties to label 1.

    An empty neighborhood forces 0 (the positive-denominator clause).
    """
    if isinstance(estimate, RegressionEstimate):
        if estimate.empty_neighborhood:
            return 0
        value = estimate.value
    else:
        value = float(estimate)
    return 1 if value >= 0.5 else 0


@dataclass(frozen=True)
class KStarSolution:
    k_star: int
    weights: np.ndarray
    lam: float


def kstar_select(beta, holder_exponent: float = 1.0) -> KStarSolution:
    """Adaptive neighbor weights minimizing ||a||_2 + a.beta over the simplex.

    beta must be sorted ascending; it is transformed by the Holder exponent
    before solving.  The solution has a_i proportional to (lam - beta_i)+
    where lam lies in [beta_k*, beta_{k*+1}) and satisfies
    sum_{i<=k*} (lam - beta_i)^2 = 1.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or len(beta) == 0:
        raise ValueError("beta must be a nonempty 1-d array")
    if np.any(np.diff(beta) < 0):
        raise ValueError("beta must be sorted ascending")
    if not holder_exponent > 0:
        raise ValueError("holder_exponent must be positive")
    b = beta ** holder_exponent
    n = len(b)
    ks = np.arange(1, n + 1, dtype=float)
    s1 = np.cumsum(b)
    s2 = np.cumsum(b * b)
    disc = ks + s1 * s1 - ks * s2
    with np.errstate(invalid="ignore"):
        lam = (s1 + np.sqrt(np.maximum(disc, 0.0))) / ks
    lam[disc < 0] = np.nan
    upper = np.append(b[1:], np.inf)
    ok = (disc >= 0) & (lam >= b - 1e-12) & (lam < upper)
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        raise RuntimeError("no bracketed solution found; beta may be malformed")
    k_star = int(idx[0]) + 1
    lam_star = float(lam[k_star - 1])
    raw = np.maximum(lam_star - b, 0.0)
    weights = raw / raw.sum()
    return KStarSolution(k_star, weights, lam_star)


@dataclass(frozen=True)
class PartitionRegion:
    lower: np.ndarray  # inclusive; -inf on unbounded sides
    upper: np.ndarray  # exclusive; +inf on unbounded sides
    members: np.ndarray
    label: float

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower) and np.all(q < self.upper))


@dataclass(frozen=True)
class PartitionKernel:
    """Disjoint covering boxes with member id sets and mean-label leaf values."""

    regions: Tuple[PartitionRegion, ...]
    n_train: int

    def region_of(self, q) -> PartitionRegion:
        for region in self.regions:
            if region.contains(q):
                return region
        raise ValueError("query not covered by any region")

    def predict(self, q) -> float:
        return self.region_of(q).label


def train_partition_kernel(ds: LabeledDataset, min_leaf: int = 5) -> PartitionKernel:
    """Greedy axis-aligned splitter: best variance reduction, midpoint splits.

    Any partition satisfying the region invariants exercises the learned
    kernel weights; this keeps training minimal on purpose.
    """
    _require_labels(ds)
    pts = ds.points
    y = ds.labels
    d = ds.dim
    regions: List[PartitionRegion] = []

    def sse(vals) -> float:
        return float(((vals - vals.mean()) ** 2).sum()) if len(vals) else 0.0

    def build(ids: np.ndarray, lower: np.ndarray, upper: np.ndarray):
        best = None
        if len(ids) >= 2 * min_leaf:
            base = sse(y[ids])
            for axis in range(d):
                vals = pts[ids, axis]
                order = np.argsort(vals, kind="stable")
                sv = vals[order]
                sy = y[ids][order]
                cy = np.cumsum(sy)
                cy2 = np.cumsum(sy * sy)
                total_y, total_y2 = cy[-1], cy2[-1]
                for cut in range(min_leaf, len(ids) - min_leaf + 1):
                    if sv[cut - 1] == sv[cut]:
                        continue
                    left_sse = cy2[cut - 1] - cy[cut - 1] ** 2 / cut
                    rn = len(ids) - cut
                    right_sse = (total_y2 - cy2[cut - 1]) - (total_y - cy[cut - 1]) ** 2 / rn
                    gain = base - left_sse - right_sse
                    if gain > 1e-12 and (best is None or gain > best[0]):
                        best = (gain, axis, 0.5 * (sv[cut - 1] + sv[cut]))
        if best is None:
            regions.append(PartitionRegion(lower.copy(), upper.copy(), ids,
                                           float(y[ids].mean())))
            return
        _, axis, thr = best
        mask = pts[ids, axis] < thr
        ul = upper.copy()
        ul[axis] = thr
        ll = lower.copy()
        ll[axis] = thr
        build(ids[mask], lower, ul)
        build(ids[~mask], ll, upper)

    build(np.arange(ds.n), np.full(d, -np.inf), np.full(d, np.inf))
    return PartitionKernel(tuple(regions), ds.n)


def partition_kernel_weights(pk: PartitionKernel, q) -> np.ndarray:
    """Weight 1/|N_j| on the members of the region containing q, 0 elsewhere."""
    region = pk.region_of(q)
    if len(region.members) == 0:
        raise ValueError("region has empty membership")
    w = np.zeros(pk.n_train)
    w[region.members] = 1.0 / len(region.members)
    return w


def adaptive_k(pk: PartitionKernel, q) -> int:
    """Number of nearest neighbors the partition picks for q: |N_j|."""
    return int(len(pk.region_of(q).members))


def ensemble_kernel_weights(members: Sequence[Tuple[PartitionKernel, float]],
                            mode: str, q) -> np.ndarray:
    """Coefficient-weighted sum of member kernel weights.

    Bagging requires every coefficient to be 1/B; boosting requires
    nonnegative coefficients.  The prediction is weights . labels.
    """
    if not members:
        raise ValueError("empty ensemble")
    coeffs = np.array([c for _, c in members], dtype=float)
    if mode == BAGGING:
        if not np.allclose(coeffs, 1.0 / len(members), rtol=0, atol=1e-12):
            raise ValueError("bagging coefficients must all equal 1/B")
    elif mode == BOOSTING:
        if np.any(coeffs < 0):
            raise ValueError("boosting coefficients must be nonnegative")
    else:
        raise ValueError(f"unknown ensemble mode: {mode!r}")
    total = np.zeros(members[0][0].n_train)
    for pk, coeff in members:
        total += coeff * partition_kernel_weights(pk, q)
    return total


def _pairwise_distances(ds: LabeledDataset) -> np.ndarray:
    if ds.kind == "bits":
        return (ds.points[:, None, :] != ds.points[None, :, :]).sum(axis=2).astype(float)
    sq = (ds.points ** 2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (ds.points @ ds.points.T)
    return np.sqrt(np.maximum(d2, 0.0))


def _proxy_matrix(ds: LabeledDataset, k: int, include_self: bool) -> np.ndarray:
    """Row i holds the labels of X_i's k nearest training points."""
    dist = _pairwise_distances(ds)
    proxies = np.empty((ds.n, k))
    for i in range(ds.n):
        row = dist[i].copy()
        if not include_self:
            row[i] = np.inf
        order = rank_neighbors(row, ds.priorities)[:k]
        proxies[i] = ds.labels[order]
    return proxies


def two_layer_knn(ds: LabeledDataset, q, k: int, k2: int,
                  include_self: bool = True) -> RegressionEstimate:
    """Find neighbors by comparing k-dimensional label-proxy vectors.

    The proxy of a point is the label sequence of its k nearest training
    points (a training point's own proxy includes itself at distance zero
    unless include_self is False); q's k2 nearest proxies vote with the
    mean of their original labels.
    """
    _require_labels(ds)
    if not 1 <= k <= ds.n or not 1 <= k2 <= ds.n:
        raise ValueError("k and k2 must lie in 1..n")
    train_prx = _proxy_matrix(ds, k, include_self)
    dist = ds.distances_to(q)
    order = rank_neighbors(dist, ds.priorities)[:k]
    q_prx = ds.labels[order]
    diff = train_prx - q_prx
    pdist = np.sqrt((diff * diff).sum(axis=1))
    chosen = rank_neighbors(pdist, ds.priorities)[:k2]
    return RegressionEstimate(float(ds.labels[chosen].mean()), k2)


def two_layer_proxy_rank_of_self(ds: LabeledDataset, i: int, k: int) -> int:
    """Position (0-based) of training point i in its own proxy neighbor list."""
    dist = ds.distances_to(ds.points[i])
    order = rank_neighbors(dist, ds.priorities)[:k]
    where = np.flatnonzero(order == i)
    return int(where[0]) if len(where) else -1

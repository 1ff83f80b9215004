"""Locality-sensitive hashing over Hamming space.

Implements the bit-sampling family (an atomic hash returns one random
coordinate of the point), d' x L amplification with bucket tables, the
approximate near-neighbor query, and the radius-ladder reduction from
near to nearest neighbor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .core import LabeledDataset, NeighborHit

# fixed tabulation-hash tables: bucket keys must be stable across runs and
# builds, so the mixing constants never depend on a caller seed
_MIX_ROOT = np.random.default_rng(0x5EEDB0B5)
_MIX_TABLE = _MIX_ROOT.integers(0, 2**64, size=(256, 2), dtype=np.uint64)

_CEIL_EPS = 1e-9  # guards exact-boundary ratios like log(1024)/log(2)


class LadderRangeError(RuntimeError):
    """Raised when every rung of the radius ladder comes back empty."""


@dataclass(frozen=True)
class LshFamilyParams:
    """(c, R, P1, P2) description of a locality-sensitive family."""

    c: float
    R: float
    P1: float
    P2: float

    def __post_init__(self):
        if not self.c > 1:
            raise ValueError("approximation factor c must exceed 1")
        if not (0 < self.P2 < self.P1 < 1):
            raise ValueError("need 0 < P2 < P1 < 1")


def hamming_family(d: int, R: float, c: float) -> LshFamilyParams:
    """Bit-sampling family parameters: P1 = 1 - R/d, P2 = 1 - cR/d."""
    if not 0 < c * R < d:
        raise ValueError("need 0 < c*R < d for a nondegenerate Hamming family")
    return LshFamilyParams(c=c, R=R, P1=1.0 - R / d, P2=1.0 - c * R / d)


@dataclass(frozen=True)
class BitSampleHash:
    """Atomic hash h(x) = x[coord] for one fixed coordinate."""

    coord: int

    def __call__(self, x) -> int:
        return int(np.asarray(x)[self.coord])


def sample_bit_hash(d: int, rng: np.random.Generator) -> BitSampleHash:
    """Draw an atomic hash uniformly from the bit-sampling family."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return BitSampleHash(int(rng.integers(0, d)))


def lsh_params(P1: float, P2: float, n: int, delta: float) -> Tuple[int, int, float]:
    """Amplification sizes and query exponent for the (P1, P2) family.

    d' = ceil(ln n / ln(1/P2)) so that P2^d' <= 1/n,
    L  = ceil(ln delta / ln(1 - P1^d')),
    phi = ln(1/P1) / ln(1/P2).
    """
    if not (0 < P2 < P1 < 1):
        raise ValueError("degenerate family: need 0 < P2 < P1 < 1")
    if n < 1 or not 0 < delta < 1:
        raise ValueError("need n >= 1 and delta in (0, 1)")
    phi = math.log(1.0 / P1) / math.log(1.0 / P2)
    d_prime = max(1, math.ceil(math.log(n) / math.log(1.0 / P2) - _CEIL_EPS))
    p_col = P1 ** d_prime
    if p_col <= 0:
        raise ValueError("P1^d' underflows; family too weak for this n")
    L = max(1, math.ceil(math.log(delta) / math.log(1.0 - p_col) - _CEIL_EPS))
    return d_prime, L, phi


@dataclass(frozen=True)
class AmplifiedHasher:
    """d' x L matrix of atomic bit-sampling hashes.

    coords[i, j] is the coordinate read by atomic hash h_{i,j}; column j
    defines g_j mapping a point to a d'-tuple of bits.
    """

    coords: np.ndarray  # (d', L) int
    d: int

    @classmethod
    def draw(cls, d: int, d_prime: int, L: int, rng: np.random.Generator) -> "AmplifiedHasher":
        if d_prime > len(_MIX_TABLE):
            raise ValueError(f"d' > {len(_MIX_TABLE)} not supported by the key mixer")
        return cls(rng.integers(0, d, size=(d_prime, L)), d)

    @property
    def d_prime(self) -> int:
        return self.coords.shape[0]

    @property
    def L(self) -> int:
        return self.coords.shape[1]

    def column_keys(self, points: np.ndarray) -> np.ndarray:
        """64-bit bucket key of every point under every column g_j -> (n, L).

        The d'-tuple of bits is reduced by tabulation hashing with fixed
        tables; reducer collisions only ever add false candidates.
        """
        pts = np.atleast_2d(points)
        n = pts.shape[0]
        keys = np.empty((n, self.L), dtype=np.uint64)
        rows = np.arange(self.d_prime)
        for j in range(self.L):
            bits = pts[:, self.coords[:, j]].astype(np.intp)  # (n, d')
            mixed = _MIX_TABLE[rows[None, :], bits]            # (n, d')
            keys[:, j] = np.bitwise_xor.reduce(mixed, axis=1)
        return keys


@dataclass
class LshIndex:
    """One bucket table per amplified column; every id appears in L buckets."""

    hasher: AmplifiedHasher
    dataset: LabeledDataset
    tables: List[dict]

    def candidates(self, q) -> np.ndarray:
        """Union of training ids across the L buckets the query falls in."""
        qkeys = self.hasher.column_keys(np.asarray(q)[None, :])[0]
        found = [self.tables[j][k] for j, k in enumerate(qkeys.tolist())
                 if k in self.tables[j]]
        if not found:
            return np.empty(0, dtype=np.intp)
        return np.unique(np.concatenate(found))


def build_lsh_index(ds: LabeledDataset, hasher: AmplifiedHasher) -> LshIndex:
    """Hash every point into its L buckets, storing only nonempty buckets."""
    if ds.kind != "bits":
        raise ValueError("LSH index requires a bit-vector dataset")
    if ds.dim != hasher.d:
        raise ValueError(f"dimension mismatch: dataset d={ds.dim}, hasher d={hasher.d}")
    keys = hasher.column_keys(ds.points)
    tables: List[dict] = []
    for j in range(hasher.L):
        col = keys[:, j]
        order = np.argsort(col, kind="stable")
        uniq, starts = np.unique(col[order], return_index=True)
        table = {}
        bounds = list(starts) + [len(col)]
        for u, lo, hi in zip(uniq.tolist(), bounds[:-1], bounds[1:]):
            table[u] = order[lo:hi]
        tables.append(table)
    return LshIndex(hasher, ds, tables)


def query_near_stats(index: LshIndex, q, cR: float) -> Tuple[Optional[NeighborHit], int]:
    """(closest candidate within cR or None, number of candidates scanned)."""
    ids = index.candidates(q)
    if len(ids) == 0:
        return None, 0
    ds = index.dataset
    q = np.asarray(q)
    dist = (ds.points[ids] != q).sum(axis=1).astype(float)
    pri = ds.priorities[ids]
    best = np.lexsort((ids, pri, dist))[0]
    if dist[best] > cR:
        return None, len(ids)
    return NeighborHit(int(ids[best]), float(dist[best]), float(pri[best])), len(ids)


def query_near(index: LshIndex, q, cR: float) -> Optional[NeighborHit]:
    """Closest point among the query's buckets with distance <= cR, if any."""
    return query_near_stats(index, q, cR)[0]


def estimate_min_distance(ds: LabeledDataset, rng: np.random.Generator,
                          sample_size: int = 256) -> float:
    """Minimum nonzero pairwise distance over a random sample of the data."""
    m = min(ds.n, sample_size)
    ids = rng.choice(ds.n, size=m, replace=False) if ds.n > m else np.arange(ds.n)
    pts = ds.points[ids].astype(np.int16)
    dist = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)
    nz = dist[dist > 0]
    if len(nz) == 0:
        return 1.0
    return float(nz.min())


def ladder_radii(d: int, n: int, c: float, gamma: float, r0: float) -> List[float]:
    """Rung radii (1+gamma)^k * r0/c while cR stays below the space diameter."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    radii = []
    r = r0 / c
    while c * r < d:
        radii.append(r)
        r *= 1.0 + gamma
        if len(radii) > 8 * max(1, math.ceil(math.log(max(n, 2)))):
            break
    return radii or [r0 / c]


def nearest_via_ladder_stats(ds: LabeledDataset, q, c: float, gamma: float,
                             delta: float, rng: np.random.Generator):
    """(approximate nearest hit, total candidates scanned) via the radius ladder.

    Builds one near-neighbor index per rung radius R = (1+gamma)^k R0/c,
    splitting delta evenly across rungs, queries all of them, and returns
    the closest nonempty answer.
    """
    if ds.n == 0:
        raise ValueError("empty dataset")
    d = ds.dim
    r0 = estimate_min_distance(ds, rng)
    radii = ladder_radii(d, ds.n, c, gamma, r0)
    delta_rung = delta / len(radii)
    best: Optional[NeighborHit] = None
    scanned = 0
    for R in radii:
        if not 0 < c * R < d:
            continue
        fam = hamming_family(d, R, c)
        d_prime, L, _ = lsh_params(fam.P1, fam.P2, ds.n, delta_rung)
        hasher = AmplifiedHasher.draw(d, d_prime, L, rng)
        index = build_lsh_index(ds, hasher)
        hit, m = query_near_stats(index, q, c * R)
        scanned += m
        if hit is not None and (best is None or hit.key() < best.key()):
            best = hit
    if best is None:
        raise LadderRangeError("all ladder rungs empty; widen the radius range")
    return best, scanned


def nearest_via_ladder(ds: LabeledDataset, q, c: float, gamma: float,
                       delta: float, rng: np.random.Generator) -> NeighborHit:
    """c(1+gamma)-approximate nearest neighbor with probability >= 1 - delta."""
    return nearest_via_ladder_stats(ds, q, c, gamma, delta, rng)[0]


def collision_prob_estimate(d: int, x1, x2, trials: int,
                            rng: np.random.Generator) -> float:
    """Monte Carlo fraction of drawn atomic hashes with h(x1) == h(x2)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    idx = rng.integers(0, d, size=trials)
    return float(np.mean(x1[idx] == x2[idx]))

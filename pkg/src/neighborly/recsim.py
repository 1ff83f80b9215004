"""Online collaborative filtering simulator on the latent source model.

Users belong to r preference clusters; at each step every user consumes one
recommended item and rates it +1 with the cluster's item probability, else
-1.  Collaborative-Greedy mixes random exploration (probability 1/n^alpha),
joint exploration along a shared random item order (probability 1/t^alpha),
and greedy exploitation of fixed-radius neighborhood scores under a cosine
distance, either over commonly rated items or over the jointly explored set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

COSINE = "cosine"
JOINT_COSINE = "joint_cosine"

COLLAB_GREEDY = "collaborative_greedy"
RANDOM_ONLY = "random_only"
POP_AMONG_NEIGHBORS = "popularity_among_neighbors"
ORACLE = "oracle"


@dataclass(frozen=True)
class LatentCfModel:
    """Cluster preference vectors in [0,1]^m with bounded rating noise.

    sigma bounds min(mu, 1-mu) per entry; zeta is the realized minimum
    proportion of likable items (mu > 1/2) over clusters.
    """

    prefs: np.ndarray  # (r, m)
    sigma: float
    zeta: float
    sep_param: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.sigma < 0.5:
            raise ValueError("sigma must lie in [0, 1/2)")
        slack = np.minimum(self.prefs, 1.0 - self.prefs)
        if np.any(slack > self.sigma + 1e-12):
            raise ValueError("preference entries violate the noise bound sigma")

    @property
    def r(self) -> int:
        return self.prefs.shape[0]

    @property
    def m(self) -> int:
        return self.prefs.shape[1]

    def likable(self) -> np.ndarray:
        return self.prefs > 0.5


def realized_zeta(prefs: np.ndarray) -> float:
    return float((prefs > 0.5).mean(axis=1).min())


def expected_cosine_similarity(model: LatentCfModel, g: int, h: int) -> float:
    """(1/m) <2 mu_g - 1, 2 mu_h - 1>: expected cosine similarity of two clusters."""
    a = 2.0 * model.prefs[g] - 1.0
    b = 2.0 * model.prefs[h] - 1.0
    return float(a @ b) / model.m


def realized_sep_param(prefs: np.ndarray, sigma: float) -> Optional[float]:
    """Largest S* the generated clusters satisfy: sim <= (1 - S*)(1 - 2 sigma)^2."""
    r = prefs.shape[0]
    if r < 2:
        return None
    m = prefs.shape[1]
    signed = 2.0 * prefs - 1.0
    sims = (signed @ signed.T) / m
    worst = max(float(sims[g, h]) for g in range(r) for h in range(r) if g != h)
    return 1.0 - worst / (1.0 - 2.0 * sigma) ** 2


def gen_cf_model(r: int, m: int, sigma: float, zeta_target: float,
                 rng: np.random.Generator) -> LatentCfModel:
    """Entries are 1 - sigma (likable) with probability zeta_target, else sigma."""
    if not 0 <= sigma < 0.5:
        raise ValueError("sigma must lie in [0, 1/2)")
    if not 0 < zeta_target < 0.5:
        raise ValueError("zeta_target must lie in (0, 1/2)")
    if r < 1 or m < 1:
        raise ValueError("need r, m >= 1")
    likable = rng.random((r, m)) < zeta_target
    prefs = np.where(likable, 1.0 - sigma, sigma)
    return LatentCfModel(prefs, sigma, realized_zeta(prefs),
                         realized_sep_param(prefs, sigma))


def cosine_sep_check(model: LatentCfModel, s_star: float) -> bool:
    """True iff every distinct cluster pair satisfies the separation condition
    1 - sim >= 4 (sigma (1 - sigma) + S* (1/2 - sigma)^2)."""
    if model.r < 2:
        raise ValueError("need at least two clusters")
    rhs = 4.0 * (model.sigma * (1.0 - model.sigma)
                 + s_star * (0.5 - model.sigma) ** 2)
    for g in range(model.r):
        for h in range(g + 1, model.r):
            if 1.0 - expected_cosine_similarity(model, g, h) < rhs:
                return False
    return True


def prescribed_h(sigma: float, s_star: float) -> float:
    """Neighborhood radius from the performance guarantee: 1 - 2 (1/2 - sigma)^2 S*."""
    return 1.0 - 2.0 * (0.5 - sigma) ** 2 * s_star


@dataclass(frozen=True)
class Policy:
    kind: str
    h: float = 1.0
    alpha: float = 0.5
    distance: str = JOINT_COSINE

    def __post_init__(self):
        if self.kind not in (COLLAB_GREEDY, RANDOM_ONLY, POP_AMONG_NEIGHBORS, ORACLE):
            raise ValueError(f"unknown policy kind: {self.kind!r}")
        if self.kind == COLLAB_GREEDY:
            if not 0 < self.alpha <= 4.0 / 7.0:
                raise ValueError("alpha must lie in (0, 4/7]")
            if not 0 <= self.h <= 2:
                raise ValueError("h must lie in [0, 2]")
            if self.distance not in (COSINE, JOINT_COSINE):
                raise ValueError(f"unknown distance variant: {self.distance!r}")


@dataclass
class SimState:
    """Revealed ratings and exploration bookkeeping for one simulation run."""

    ratings: np.ndarray          # (n, m) in {-1, 0, +1}; 0 = not consumed
    xi: np.ndarray               # shared random item order for joint exploration
    t_joint: int = 0             # number of joint exploration steps so far
    t: int = 0                   # time steps completed

    @property
    def n_users(self) -> int:
        return self.ratings.shape[0]

    @property
    def n_items(self) -> int:
        return self.ratings.shape[1]

    @property
    def psi_joint(self) -> np.ndarray:
        """Jointly explored items: the consumed prefix of xi."""
        return self.xi[: self.t_joint]

    def consumed(self) -> np.ndarray:
        return self.ratings != 0


def _pair_distances(state: SimState, variant: str) -> np.ndarray:
    """Pairwise user cosine distances; inf where no comparable items exist."""
    Y = state.ratings.astype(float)
    if variant == JOINT_COSINE:
        psi = state.psi_joint
        if len(psi) == 0:
            return np.full((state.n_users, state.n_users), np.inf)
        Yj = Y[:, psi]
        dots = Yj @ Yj.T
        return 1.0 - dots / len(psi)
    rated = (state.ratings != 0).astype(float)
    common = rated @ rated.T
    dots = Y @ Y.T
    with np.errstate(invalid="ignore", divide="ignore"):
        dist = 1.0 - dots / common
    dist[common == 0] = np.inf
    return dist


def score_matrix(state: SimState, h: float, variant: str) -> np.ndarray:
    """Fixed-radius neighborhood scores p-hat for every (user, item) -> (n, m).

    Entry (u, i) is the fraction of u's neighbors (distance <= h) that rated
    item i as +1 among those who rated it at all, and 1/2 when none did.
    """
    neighbors = _pair_distances(state, variant) <= h
    plus = (state.ratings == 1).astype(float)
    rated = (state.ratings != 0).astype(float)
    num = neighbors @ plus
    den = neighbors @ rated
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = num / den
    scores[den == 0] = 0.5
    return scores


def score_pui(state: SimState, u: int, i: int, h: float,
              distance_variant: str = JOINT_COSINE) -> float:
    """Score of one (user, item) pair; see score_matrix."""
    return float(score_matrix(state, h, distance_variant)[u, i])


def _random_unconsumed(state: SimState, u: int, rng: np.random.Generator) -> int:
    options = np.flatnonzero(state.ratings[u] == 0)
    if len(options) == 0:
        raise ValueError(f"user {u} has no unconsumed items")
    return int(options[rng.integers(0, len(options))])


def _first_unconsumed_in_xi(state: SimState, u: int) -> int:
    for item in state.xi:
        if state.ratings[u, item] == 0:
            return int(item)
    raise ValueError(f"user {u} has no unconsumed items")


def _argmax_random_tie(row: np.ndarray, valid: np.ndarray,
                       rng: np.random.Generator) -> int:
    vals = np.where(valid, row, -np.inf)
    top = vals.max()
    ties = np.flatnonzero(vals == top)
    return int(ties[rng.integers(0, len(ties))])


def collaborative_greedy_step(state: SimState, model: LatentCfModel,
                              assignment: np.ndarray, policy: Policy,
                              rng: np.random.Generator) -> Tuple[np.ndarray, str]:
    """Advance one time step; returns (items recommended per user, branch taken).

    Branch probabilities: joint exploration 1/t^alpha, then random
    exploration 1/n^alpha clipped so the two sum to at most 1 (joint takes
    precedence when they would overlap, which only happens at small t).
    Ratings for the recommended items are revealed Bernoulli(p_ui) as +1/-1.
    """
    n = state.n_users
    t = state.t + 1
    recs = np.empty(n, dtype=int)
    branch = "exploit"
    if policy.kind == COLLAB_GREEDY:
        eps_j = min(1.0, 1.0 / t ** policy.alpha)
        eps_r = min(1.0 - eps_j, 1.0 / n ** policy.alpha)
        u01 = rng.random()
        if u01 < eps_j:
            branch = "joint"
        elif u01 < eps_j + eps_r:
            branch = "random"
    elif policy.kind == RANDOM_ONLY:
        branch = "random"
    elif policy.kind == ORACLE:
        branch = "oracle"
    else:
        branch = "paf"

    if branch == "joint":
        for u in range(n):
            recs[u] = _first_unconsumed_in_xi(state, u)
        state.t_joint += 1
    elif branch == "random":
        for u in range(n):
            recs[u] = _random_unconsumed(state, u, rng)
    elif branch == "oracle":
        likable = model.likable()
        for u in range(n):
            unconsumed = state.ratings[u] == 0
            good = np.flatnonzero(unconsumed & likable[assignment[u]])
            if len(good) > 0:
                recs[u] = int(good[rng.integers(0, len(good))])
            else:
                recs[u] = _random_unconsumed(state, u, rng)
    elif branch == "paf":
        neighbors = _pair_distances(state, COSINE) <= policy.h
        popularity = neighbors.astype(float) @ (state.ratings == 1).astype(float)
        for u in range(n):
            recs[u] = _argmax_random_tie(popularity[u], state.ratings[u] == 0, rng)
    else:
        scores = score_matrix(state, policy.h, policy.distance)
        for u in range(n):
            recs[u] = _argmax_random_tie(scores[u], state.ratings[u] == 0, rng)

    p = model.prefs[assignment, recs]
    liked = rng.random(n) < p
    state.ratings[np.arange(n), recs] = np.where(liked, 1, -1)
    state.t = t
    return recs, branch


@dataclass
class SimResult:
    """Reward accounting for one run."""

    likable_per_step: np.ndarray      # count of likable recommendations per step
    cum_likable: np.ndarray           # cumulative R+ estimate
    mean_cum_rating: np.ndarray       # (1/n) sum of revealed ratings up to t
    assignment: np.ndarray
    final_ratings: np.ndarray         # revealed ratings snapshot after T steps
    recommendations: Optional[np.ndarray] = None  # (T, n) item ids
    branches: Optional[List[str]] = None

    def likable_fraction(self, n_users: int) -> np.ndarray:
        t = np.arange(1, len(self.cum_likable) + 1)
        return self.cum_likable / (t * n_users)


def simulate(model: LatentCfModel, n_users: int, T: int, policy: Policy,
             rng: np.random.Generator, record_log: bool = False) -> SimResult:
    """Run T steps; rewards count recommendations with true p_ui > 1/2."""
    if T > model.m:
        raise ValueError("T cannot exceed the number of items")
    if n_users < 1:
        raise ValueError("need at least one user")
    assignment = rng.integers(0, model.r, size=n_users)
    state = SimState(ratings=np.zeros((n_users, model.m), dtype=np.int8),
                     xi=rng.permutation(model.m))
    likable = model.likable()
    per_step = np.zeros(T)
    ratings_sum = np.zeros(T)
    log = np.empty((T, n_users), dtype=int) if record_log else None
    branches: List[str] = [] if record_log else None
    for step in range(T):
        recs, branch = collaborative_greedy_step(state, model, assignment,
                                                 policy, rng)
        per_step[step] = likable[assignment, recs].sum()
        ratings_sum[step] = state.ratings[np.arange(n_users), recs].sum()
        if record_log:
            log[step] = recs
            branches.append(branch)
    return SimResult(per_step, np.cumsum(per_step),
                     np.cumsum(ratings_sum) / n_users, assignment,
                     state.ratings.copy(), log, branches)

"""Latent source model for time series classification.

Time series are generated as noisy copies of r cluster-center sources,
advanced by a nonnegative shift drawn uniformly from {0..dmax}; the
distance used by the classifiers searches shifts in {-dmax..dmax}.
Includes the 1-NN and Gaussian-kernel classifiers, the oracle MAP rule
that knows the sources, the opposite-label separation diagnostic, and a
Monte Carlo harness for the k-NN regression pointwise error prescription
(n and k chosen from the error/probability tolerances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .core import TimeSeries, rank_neighbors


@dataclass(frozen=True)
class LatentTsModel:
    """Cluster-center sources on a common window, with labels and mixture weights.

    sources[g, j] is source g at time step start + j.  Sources must cover
    steps 1 - dmax .. t_max + 2*dmax so that any generated series can be
    compared under every allowed shift.
    """

    sources: np.ndarray
    start: int
    labels: np.ndarray
    probs: np.ndarray
    sigma: float
    dmax: int
    t_max: int

    def __post_init__(self):
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError("occurrence probabilities must sum to 1")
        if np.any(self.probs <= 0):
            raise ValueError("occurrence probabilities must be positive")
        labs = set(np.unique(self.labels).tolist())
        if not labs <= {0.0, 1.0} or len(labs) < 2:
            raise ValueError("need at least one source per label in {0, 1}")
        if self.sigma < 0 or self.dmax < 0:
            raise ValueError("sigma and dmax must be nonnegative")

    @property
    def r(self) -> int:
        return self.sources.shape[0]

    @property
    def pi_min(self) -> float:
        return float(self.probs.min())

    def source_series(self, g: int) -> TimeSeries:
        return TimeSeries(self.sources[g], self.start)


@dataclass(frozen=True)
class TheoryParams:
    """Knobs of the pointwise k-NN regression guarantee."""

    holder_c: float = 1.0
    holder_alpha: float = 1.0
    eps: float = 0.2
    delta: float = 0.1
    p_min: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if min(self.holder_c, self.eps, self.p_min) <= 0:
            raise ValueError("C, eps, p_min must be positive")
        if not 0 < self.holder_alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class TsTrainingSet:
    """Aligned generated series (rows) with labels, cluster ids, priorities."""

    series: np.ndarray  # (n, W) on window [start, start + W - 1]
    start: int
    labels: np.ndarray
    clusters: np.ndarray
    shifts: np.ndarray
    priorities: np.ndarray

    @property
    def n(self) -> int:
        return self.series.shape[0]

    def as_time_series(self, i: int) -> TimeSeries:
        return TimeSeries(self.series[i], self.start)


def gen_latent_sources(r: int, t_max: int, smooth_scale: float,
                       rng: np.random.Generator, sigma: float = 1.0,
                       dmax: int = 0, step_std: float = 10.0) -> LatentTsModel:
    """Gaussian-noise sources smoothed by a 1-D Gaussian filter.

    Per-step values are N(0, step_std^2) (the experiments use variance 100);
    half the sources get label 1, the rest 0, all with equal probability.
    """
    if r < 2:
        raise ValueError("need r >= 2 sources")
    start = 1 - dmax
    width = (t_max + 2 * dmax) - start + 1
    vals = rng.normal(0.0, step_std, size=(r, width))
    if smooth_scale > 0:
        vals = gaussian_filter1d(vals, sigma=smooth_scale, axis=1, mode="nearest")
    labels = np.zeros(r)
    labels[: r // 2] = 1.0
    return LatentTsModel(vals, start, labels, np.full(r, 1.0 / r),
                         sigma, dmax, t_max)


def gen_time_series(model: LatentTsModel, n: int,
                    rng: np.random.Generator) -> TsTrainingSet:
    """Sample n series: cluster ~ probs, shift uniform on {0..dmax}, plus noise.

    All series are materialized on the common window
    [1 - dmax, t_max + dmax], which every shifted source covers.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    start = 1 - model.dmax
    width = model.t_max + model.dmax - start + 1
    clusters = rng.choice(model.r, size=n, p=model.probs)
    shifts = rng.integers(0, model.dmax + 1, size=n)
    series = np.empty((n, width))
    for i in range(n):
        off = (start + shifts[i]) - model.start
        series[i] = model.sources[clusters[i], off:off + width]
    if model.sigma > 0:
        series = series + rng.normal(0.0, model.sigma, size=series.shape)
    return TsTrainingSet(series, start, model.labels[clusters], clusters,
                         shifts, rng.uniform(0.0, 1.0, n))


def _shifted_windows(values: np.ndarray, start: int, T: int, dmax: int) -> np.ndarray:
    """All length-T windows x(t + delta), delta in [-dmax..dmax] -> (rows?, 2dmax+1, T)."""
    vals = np.atleast_2d(values)
    lo = (1 - dmax) - start
    hi = (T + dmax) - start
    if lo < 0 or hi >= vals.shape[1]:
        raise ValueError("series window too short for the requested T and dmax")
    seg = vals[:, lo:hi + 1]
    return np.lib.stride_tricks.sliding_window_view(seg, T, axis=1)


def shift_distance_matrix(train: TsTrainingSet, tests: np.ndarray, test_start: int,
                          T: int, dmax: int) -> np.ndarray:
    """Shift-minimized distances between test rows and training rows -> (Q, n)."""
    wins = _shifted_windows(train.series, train.start, T, dmax)  # (n, S, T)
    tq = np.atleast_2d(tests)
    lo = 1 - test_start
    xw = tq[:, lo:lo + T]                                        # (Q, T)
    w2 = (wins ** 2).sum(axis=2)                                 # (n, S)
    x2 = (xw ** 2).sum(axis=1)                                   # (Q,)
    cross = np.tensordot(xw, wins, axes=([1], [2]))              # (Q, n, S)
    d2 = x2[:, None, None] + w2[None, :, :] - 2.0 * cross
    return np.sqrt(np.maximum(d2.min(axis=2), 0.0))


def ts_1nn_classify(train: TsTrainingSet, x: TimeSeries, T: int, dmax: int) -> int:
    """Label of the shift-minimized nearest training series."""
    if train.n == 0:
        raise ValueError("empty training set")
    dist = shift_distance_matrix(train, x.window(1, T)[None, :], 1, T, dmax)[0]
    best = rank_neighbors(dist, train.priorities)[0]
    return int(train.labels[best])


def ts_kernel_votes(train: TsTrainingSet, x: TimeSeries, T: int, dmax: int,
                    h: float) -> Dict[int, float]:
    """Weighted vote totals V0, V1 with Gaussian weights exp(-rho^2 / (2 h^2))."""
    dist = shift_distance_matrix(train, x.window(1, T)[None, :], 1, T, dmax)[0]
    w = np.exp(-(dist ** 2) / (2.0 * h * h))
    return {1: float(w[train.labels == 1].sum()),
            0: float(w[train.labels == 0].sum())}


def ts_kernel_classify(train: TsTrainingSet, x: TimeSeries, T: int, dmax: int,
                       h: float, vote_bias: float = 1.0) -> int:
    """1 iff V1 >= vote_bias * V0 (generalized weighted majority voting)."""
    if train.n == 0:
        raise ValueError("empty training set")
    if not h > 0:
        raise ValueError("h must be positive")
    votes = ts_kernel_votes(train, x, T, dmax, h)
    return 1 if votes[1] >= vote_bias * votes[0] else 0


def ts_oracle_map(model: LatentTsModel, x: TimeSeries, T: int, h: float) -> int:
    """MAP decision knowing the sources: pi-weighted Gaussian likelihood votes
    summed over the nonnegative generative shifts {0..dmax}."""
    if not h > 0:
        raise ValueError("h must be positive")
    xw = x.window(1, T)
    exponents = np.empty((model.r, model.dmax + 1))
    for g in range(model.r):
        for delta in range(model.dmax + 1):
            seg = model.source_series(g).window(1 + delta, T + delta)
            diff = xw - seg
            exponents[g, delta] = -float(np.dot(diff, diff)) / (2.0 * h * h)
    # factor out the max exponent; the vote ratio is invariant to it
    m = exponents.max()
    weights = model.probs[:, None] * np.exp(exponents - m)
    v1 = float(weights[model.labels == 1].sum())
    v0 = float(weights[model.labels == 0].sum())
    if v0 == 0.0 and v1 == 0.0:
        raise FloatingPointError("degenerate MAP vote: both label totals vanished")
    return 1 if v1 >= v0 else 0


def separation(train: TsTrainingSet, T: int, dmax: int) -> float:
    """Minimum distance between opposite-label training series over all
    shift pairs in {-dmax..dmax}^2, windowed to steps 1..T."""
    ones = np.flatnonzero(train.labels == 1)
    zeros = np.flatnonzero(train.labels == 0)
    if len(ones) == 0 or len(zeros) == 0:
        raise ValueError("both labels must be present")
    wins = _shifted_windows(train.series, train.start, T, dmax)
    a = wins[ones].reshape(-1, T)
    b = wins[zeros].reshape(-1, T)
    a2 = (a ** 2).sum(axis=1)
    b2 = (b ** 2).sum(axis=1)
    d2 = a2[:, None] + b2[None, :] - 2.0 * (a @ b.T)
    return float(np.sqrt(max(d2.min(), 0.0)))


def source_separation(model: LatentTsModel, T: int, opposite_labels_only: bool = False) -> float:
    """Minimum pairwise distance between true sources on steps 1..T.

    With opposite_labels_only, restrict to source pairs with different labels.
    These are purely diagnostic quantities; no algorithm consumes them.
    """
    best = np.inf
    for g in range(model.r):
        for h2 in range(g + 1, model.r):
            if opposite_labels_only and model.labels[g] == model.labels[h2]:
                continue
            diff = (model.source_series(g).window(1, T)
                    - model.source_series(h2).window(1, T))
            best = min(best, float(np.sqrt(np.dot(diff, diff))))
    return best


def theorem33_prescription(tp: TheoryParams,
                           n_override: Optional[int] = None) -> Dict[str, float]:
    """n, k, h* prescribed by the pointwise error bound on Uniform[0,1].

    h* = (eps / 2C)^(1/alpha); the ball mass at the interior midpoint is
    min(1, 2 h*).  n must cover both the training-mass condition and the
    upper end of the k sandwich; if an explicit n is too small for the
    sandwich the prescription is flagged infeasible.
    """
    h_star = (tp.eps / (2.0 * tp.holder_c)) ** (1.0 / tp.holder_alpha)
    x0 = 0.5
    p_ball = min(x0 + h_star, 1.0) - max(x0 - h_star, 0.0)
    y_range = 1.0  # labels engineered below to live in [0, 1]
    k_lo = 2.0 * y_range ** 2 / tp.eps ** 2 * math.log(4.0 / tp.delta)
    n_min = 8.0 / p_ball * math.log(2.0 / tp.delta)
    k = math.ceil(k_lo)
    if n_override is None:
        n = max(math.ceil(n_min), math.ceil(2.0 * k / p_ball))
    else:
        n = int(n_override)
    feasible = (n >= n_min) and (k_lo <= 0.5 * n * p_ball)
    return {"h_star": h_star, "p_ball": p_ball, "n": n, "k": k,
            "k_lower": k_lo, "k_upper": 0.5 * n * p_ball, "feasible": feasible}


def theorem33_harness(tp: TheoryParams, trials: int, rng: np.random.Generator,
                      n_override: Optional[int] = None,
                      k_override: Optional[int] = None) -> Dict[str, float]:
    """Monte Carlo check of the k-NN pointwise error prescription.

    Model: X ~ Uniform[0,1]; eta(x) = 0.25 + (C/2) |x - 1/2|^alpha scaled so
    labels stay in [0, 1] with Uniform(-1/4, 1/4) label noise; the target
    point is the interior midpoint.  Reports the fraction of trials with
    |eta_hat - eta(x)| <= eps.
    """
    pres = theorem33_prescription(tp, n_override)
    if not pres["feasible"]:
        return {**pres, "trials": 0, "successes": 0, "success_fraction": float("nan")}
    n = int(pres["n"])
    k = int(k_override if k_override is not None else pres["k"])
    x0 = 0.5

    def eta(x):
        return 0.25 + 0.5 * tp.holder_c * np.abs(x - x0) ** tp.holder_alpha

    target = float(eta(x0))
    successes = 0
    for _ in range(trials):
        xs = rng.uniform(0.0, 1.0, n)
        ys = np.clip(eta(xs) + rng.uniform(-0.25, 0.25, n), 0.0, 1.0)
        dist = np.abs(xs - x0)
        nearest = np.argpartition(dist, k - 1)[:k]
        if abs(float(ys[nearest].mean()) - target) <= tp.eps:
            successes += 1
    return {**pres, "k": k, "trials": trials, "successes": successes,
            "success_fraction": successes / trials}


def run_ts_error_experiment(r: int, beta: float, sigma: float, dmax: int,
                            t_grid: Sequence[int], h: float, n_test: int,
                            trials: int, rng: np.random.Generator,
                            smooth_scale: float = 30.0) -> List[dict]:
    """Mean error rates of 1-NN / kernel / oracle-MAP over fresh models.

    Each trial regenerates sources, n = ceil(beta * r * ln r) training
    series, and a shared test set evaluated at every T in the grid (the
    same test series observed longer), matching the synthetic experiment
    design of the source setup.
    """
    t_grid = sorted(t_grid)
    t_max = max(t_grid)
    n_train = math.ceil(beta * r * math.log(r))
    errors = {("1nn", T): [] for T in t_grid}
    errors.update({("kernel", T): [] for T in t_grid})
    errors.update({("oracle_map", T): [] for T in t_grid})
    for _ in range(trials):
        model = gen_latent_sources(r, t_max, smooth_scale, rng,
                                   sigma=sigma, dmax=dmax)
        train = gen_time_series(model, n_train, rng)
        test = gen_time_series(model, n_test, rng)
        for T in t_grid:
            dist = shift_distance_matrix(train, test.series, test.start, T, dmax)
            # 1-NN: tie chain over (distance, priority, index) per test row
            nn_idx = np.array([rank_neighbors(dist[i], train.priorities)[0]
                               for i in range(n_test)])
            pred_nn = train.labels[nn_idx]
            w = np.exp(-(dist ** 2) / (2.0 * h * h))
            v1 = (w * (train.labels == 1)).sum(axis=1)
            v0 = (w * (train.labels == 0)).sum(axis=1)
            pred_kernel = (v1 >= v0).astype(float)
            pred_map = np.array([
                ts_oracle_map(model, test.as_time_series(i), T, h)
                for i in range(n_test)], dtype=float)
            errors[("1nn", T)].append(float((pred_nn != test.labels).mean()))
            errors[("kernel", T)].append(float((pred_kernel != test.labels).mean()))
            errors[("oracle_map", T)].append(float((pred_map != test.labels).mean()))
    records = []
    for (method, T), errs in sorted(errors.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        records.append({"T": T, "method": method,
                        "error_rate_mean": float(np.mean(errs)),
                        "error_rate_std": float(np.std(errs)),
                        "trials": trials})
    return records

"""Unified command line: dataset I/O, benchmark loops, experiment harnesses.

Every run is fully determined by (flags, seed); the NEIGHBORLY_SEED
environment variable overrides --seed when set.  Reports are line-delimited
JSON records written to --out (stdout by default).  --freeze-timing zeroes
the volatile wall_clock_ms field so reruns are byte-identical; --figures-dir
additionally renders matplotlib figures next to the delimited output.

Exit status: 0 success, 2 input parse failure, 3 infeasible theory
parameters (a diagnostic record is still written).
"""

from __future__ import annotations

import math
import os
import sys

import click
import numpy as np

from . import boundary as bd
from . import dataio, figures, lsh, rptree, tslatent
from . import exact as ex
from . import predict as pr
from . import recsim as rs
from .core import KernelSpec
from .reports import ExperimentReport, derive_rng, derive_seed

PARSE_FAILURE = 2
INFEASIBLE = 3


def _resolve_seed(seed: int) -> int:
    env = os.environ.get("NEIGHBORLY_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.ClickException(f"NEIGHBORLY_SEED must be an integer, got {env!r}")
    return seed


def common_options(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Root seed (NEIGHBORLY_SEED overrides).")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False, writable=True),
                      default=None, help="Report path (default: stdout).")(fn)
    fn = click.option("--freeze-timing", is_flag=True,
                      help="Write wall_clock_ms as 0 for byte-stable reports.")(fn)
    fn = click.option("--figures-dir", type=click.Path(file_okay=False),
                      default=None, help="Render figures into this directory.")(fn)
    return fn


def _load(path, fmt, rng):
    try:
        if fmt == "bits":
            return dataio.load_bits(path, rng=rng)
        return dataio.load_points(path, rng=rng)
    except dataio.DatasetFormatError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(PARSE_FAILURE)


@click.group()
def main():
    """Nearest-neighbor search, prediction, and experiment toolkit."""


@main.command("bench-search")
@click.option("--index", "index_kind", required=True,
              type=click.Choice(["brute", "kdtree", "lsh", "rp-forest", "boundary-forest"]))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--queries", "query_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=1, show_default=True)
@click.option("--mode", type=click.Choice(["exact", "defeatist"]), default="exact",
              show_default=True, help="k-d tree query mode.")
@click.option("--format", "fmt", type=click.Choice(["points", "bits"]), default="points",
              show_default=True)
@click.option("--leaf-size", type=int, default=10, show_default=True)
@click.option("--trees", type=int, default=10, show_default=True)
@click.option("--max-children", type=int, default=50, show_default=True)
@click.option("--edit", type=click.Choice(["on", "off"]), default="off", show_default=True)
@click.option("--c", "c_factor", type=float, default=2.0, show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@common_options
def bench_search(index_kind, data_path, query_path, k, mode, fmt, leaf_size, trees,
                 max_children, edit, c_factor, gamma, delta, seed, out,
                 freeze_timing, figures_dir):
    """Per-query latency and recall records against brute-force truth."""
    seed = _resolve_seed(seed)
    report = ExperimentReport(seed, freeze_timing)
    rng = derive_rng(seed, "bench-data")
    ds = _load(data_path, fmt, rng)
    queries = _load(query_path, fmt, derive_rng(seed, "bench-queries"))
    if index_kind == "lsh" and (fmt != "bits" or k != 1):
        raise click.ClickException("--index lsh requires --format bits and --k 1")
    if index_kind == "boundary-forest" and edit == "on" and ds.labels is None:
        raise click.ClickException("--edit on needs a labeled dataset")

    kdtree = ex.build_kdtree(ds, leaf_size) if index_kind == "kdtree" else None
    forest = (rptree.build_rp_forest(ds, leaf_size, trees, derive_rng(seed, "rp-forest"))
              if index_kind == "rp-forest" else None)
    bforest = None
    if index_kind == "boundary-forest":
        labels = ds.labels if ds.labels is not None else np.zeros(ds.n)
        bforest = bd.BoundaryForest.build(
            ds.points, labels, trees, max_children=max_children,
            mode=bd.CLASSIFICATION_EDIT if edit == "on" else bd.ALWAYS,
            rng=derive_rng(seed, "boundary-forest"))

    report.restart_clock()
    for qi in range(queries.n):
        q = queries.points[qi]
        truth = {h.index for h in ex.brute_force_knn(ds, q, min(k, ds.n))}
        report.restart_clock()
        if index_kind == "brute":
            hits = ex.brute_force_knn(ds, q, min(k, ds.n))
        elif index_kind == "kdtree":
            hits = ex.kdtree_knn(kdtree, q, min(k, ds.n), mode)
        elif index_kind == "rp-forest":
            hits = rptree.rp_forest_query(forest, q, k)
        elif index_kind == "lsh":
            try:
                hits = [lsh.nearest_via_ladder(ds, q, c_factor, gamma, delta,
                                               derive_rng(seed, "lsh-query", qi))]
            except lsh.LadderRangeError:
                hits = []
        else:
            found = [t.query(q) for t in bforest.trees]
            found.sort(key=lambda nd: (nd[1], nd[0].node_id))
            hits = []
            seen = set()
            for node, dist in found:
                key = tuple(np.asarray(node.point).tolist())
                if key not in seen:
                    seen.add(key)
                    hits.append((node, dist))
            hits = hits[:k]
        latency = report.elapsed_ms()
        if index_kind == "boundary-forest":
            found_dist = hits[0][1] if hits else float("inf")
            recall = float("nan")  # node identity is per-tree, recall by distance
            best_true = ex.brute_force_knn(ds, q, 1)[0].distance
            recall = 1.0 if hits and abs(found_dist - best_true) < 1e-12 else 0.0
        else:
            ids = {h.index for h in hits}
            recall = len(ids & truth) / max(len(truth), 1)
            found_dist = hits[0].distance if hits else float("inf")
        report.add(record="query", query=qi, index=index_kind, k=k,
                   recall=recall, found_distance=found_dist,
                   wall_clock_ms=latency)
    report.write(out)
    if figures_dir:
        figures.render_bench_search(report.records, figures_dir)


@main.command("query")
@click.option("--method", required=True,
              type=click.Choice(["knn", "radius", "kernel", "kstar", "two-layer", "partition"]))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--queries", "query_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--h", "bandwidth", type=float, default=1.0, show_default=True)
@click.option("--kernel", "kernel_variant",
              type=click.Choice(["naive", "gaussian", "truncated_gaussian"]),
              default="gaussian", show_default=True)
@click.option("--tau", type=float, default=3.0, show_default=True)
@click.option("--k2", type=int, default=5, show_default=True,
              help="Second-layer neighbor count for two-layer.")
@click.option("--min-leaf", type=int, default=5, show_default=True)
@common_options
def query_cmd(method, data_path, query_path, k, bandwidth, kernel_variant, tau, k2,
              min_leaf, seed, out, freeze_timing, figures_dir):
    """One prediction record per query point."""
    seed = _resolve_seed(seed)
    report = ExperimentReport(seed, freeze_timing)
    ds = _load(data_path, "points", derive_rng(seed, "query-data"))
    queries = _load(query_path, "points", derive_rng(seed, "query-queries"))
    if ds.labels is None:
        click.echo("error: query methods need a labeled dataset "
                   "(header line declaring `label`)", err=True)
        sys.exit(PARSE_FAILURE)
    pk = pr.train_partition_kernel(ds, min_leaf) if method == "partition" else None
    spec = (KernelSpec(kernel_variant, bandwidth,
                       tau if kernel_variant == "truncated_gaussian" else None)
            if method == "kernel" else None)
    report.restart_clock()
    for qi in range(queries.n):
        q = queries.points[qi]
        extra = {}
        if method == "knn":
            est = pr.knn_regress(ds, q, min(k, ds.n))
        elif method == "radius":
            est = pr.fixed_radius_regress(ds, q, bandwidth)
        elif method == "kernel":
            est = pr.kernel_regress(ds, q, spec)
        elif method == "two-layer":
            est = pr.two_layer_knn(ds, q, min(k, ds.n), min(k2, ds.n))
        elif method == "partition":
            w = pr.partition_kernel_weights(pk, q)
            est = pr.RegressionEstimate(float(w @ ds.labels), int((w > 0).sum()))
        else:
            beta = np.sort(ds.distances_to(q))
            sol = pr.kstar_select(beta)
            order = np.argsort(ds.distances_to(q), kind="stable")
            value = float(sol.weights @ ds.labels[order])
            est = pr.RegressionEstimate(value, sol.k_star)
            extra["k_star"] = sol.k_star
        report.add(record="prediction", query=qi, method=method, value=est.value,
                   support_size=est.support_size, empty=est.empty_neighborhood,
                   label=pr.classify(est), **extra)
    report.write(out)
    if figures_dir:
        figures.render_query(report.records, figures_dir)


@main.command("verify-lsh")
@click.option("--d", "dim", type=int, default=64, show_default=True)
@click.option("--n", type=int, default=256, show_default=True)
@click.option("--c", "c_factor", type=float, default=2.0, show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@common_options
def verify_lsh(dim, n, c_factor, gamma, delta, trials, seed, out,
               freeze_timing, figures_dir):
    """Ladder-reduction trials on random Hamming instances."""
    seed = _resolve_seed(seed)
    report = ExperimentReport(seed, freeze_timing)
    bound = c_factor * (1.0 + gamma)
    from .core import LabeledDataset
    for trial in range(trials):
        rng = derive_rng(seed, "verify-lsh", trial)
        pts = (rng.random((n, dim)) < 0.5).astype(np.uint8)
        ds = LabeledDataset.from_bits(pts, rng=rng)
        q = (rng.random(dim) < 0.5).astype(np.uint8)
        true_hit = ex.brute_force_knn(ds, q, 1)[0]
        report.restart_clock()
        try:
            hit, scanned = lsh.nearest_via_ladder_stats(ds, q, c_factor, gamma,
                                                        delta, rng)
            found = hit.distance
        except lsh.LadderRangeError:
            found, scanned = float("inf"), 0
        report.add(record="trial", trial=trial, found_distance=found,
                   true_distance=true_hit.distance, candidates_scanned=scanned,
                   within_bound=bool(found <= bound * true_hit.distance),
                   bound_factor=bound)
    report.write(out)
    if figures_dir:
        figures.render_verify_lsh(report.records, figures_dir)


@main.command("verify-bounds")
@click.option("--theorem", type=click.Choice(["3.3"]), default="3.3", show_default=True)
@click.option("--eps", type=float, default=0.2, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--c-holder", type=float, default=1.0, show_default=True)
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("--trials", type=int, default=500, show_default=True)
@click.option("--n", "n_override", type=int, default=None,
              help="Force the training size (may make the k sandwich infeasible).")
@common_options
def verify_bounds(theorem, eps, delta, c_holder, alpha, trials, n_override,
                  seed, out, freeze_timing, figures_dir):
    """Monte Carlo verification of the k-NN pointwise error prescription."""
    seed = _resolve_seed(seed)
    report = ExperimentReport(seed, freeze_timing)
    tp = tslatent.TheoryParams(holder_c=c_holder, holder_alpha=alpha,
                               eps=eps, delta=delta)
    result = tslatent.theorem33_harness(tp, trials, derive_rng(seed, "verify-bounds"),
                                        n_override=n_override)
    report.add(record="summary", theorem=theorem, eps=eps, delta=delta,
               **{k: v for k, v in result.items()})
    report.write(out)
    if figures_dir:
        figures.render_verify_bounds(report.records, figures_dir)
    if not result["feasible"]:
        click.echo("error: infeasible k sandwich for the requested parameters",
                   err=True)
        sys.exit(INFEASIBLE)


@main.command("ts-experiment")
@click.option("--r", "n_sources", type=int, default=20, show_default=True)
@click.option("--beta", type=float, default=8.0, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--dmax", type=int, default=20, show_default=True)
@click.option("--tmax", type=int, default=100, show_default=True)
@click.option("--h", "bandwidth", type=float, default=None,
              help="Kernel bandwidth (default 2*sigma).")
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--n-test", type=int, default=100, show_default=True)
@click.option("--t-grid", default=None,
              help="Comma-separated T values (default derived from --tmax).")
@common_options
def ts_experiment(n_sources, beta, sigma, dmax, tmax, bandwidth, trials, n_test,
                  t_grid, seed, out, freeze_timing, figures_dir):
    """Error-rate records for 1-NN, kernel, and oracle MAP classifiers."""
    seed = _resolve_seed(seed)
    report = ExperimentReport(seed, freeze_timing)
    h = bandwidth if bandwidth is not None else 2.0 * sigma
    if t_grid:
        grid = [int(x) for x in t_grid.split(",")]
    else:
        grid = sorted({max(1, tmax // 8), max(1, tmax // 4), max(1, tmax // 2), tmax})
    records = tslatent.run_ts_error_experiment(
        n_sources, beta, sigma, dmax, grid, h, n_test, trials,
        derive_rng(seed, "ts-experiment"))
    for rec in records:
        report.add(record="error_rate", **rec)
    report.write(out)
    if figures_dir:
        figures.render_ts_experiment(report.records, figures_dir)


@main.command("cf-experiment")
@click.option("--r", "n_clusters", type=int, default=4, show_default=True)
@click.option("--m", "n_items", type=int, default=500, show_default=True)
@click.option("--n", "n_users", type=int, default=200, show_default=True)
@click.option("--sigma", type=float, default=0.125, show_default=True)
@click.option("--zeta", type=float, default=0.25, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--h", "bandwidth", type=float, default=None,
              help="Neighborhood radius (default from the measured separation).")
@click.option("--policy", type=click.Choice(
    ["collaborative-greedy", "random", "paf", "oracle"]),
    default="collaborative-greedy", show_default=True)
@click.option("--distance", type=click.Choice(["cosine", "joint-cosine"]),
              default="joint-cosine", show_default=True)
@click.option("--T", "horizon", type=int, default=125, show_default=True)
@click.option("--seeds", type=int, default=3, show_default=True,
              help="Number of independent runs.")
@click.option("--ratings-out", type=click.Path(dir_okay=False), default=None,
              help="Write the final ratings snapshot of the last run.")
@common_options
def cf_experiment(n_clusters, n_items, n_users, sigma, zeta, alpha, bandwidth,
                  policy, distance, horizon, seeds, ratings_out, seed, out,
                  freeze_timing, figures_dir):
    """Cumulative reward records for a recommendation policy."""
    seed = _resolve_seed(seed)
    report = ExperimentReport(seed, freeze_timing)
    kind = {"collaborative-greedy": rs.COLLAB_GREEDY, "random": rs.RANDOM_ONLY,
            "paf": rs.POP_AMONG_NEIGHBORS, "oracle": rs.ORACLE}[policy]
    last_ratings = None
    for run in range(seeds):
        rng = derive_rng(seed, "cf-experiment", run)
        model = rs.gen_cf_model(n_clusters, n_items, sigma, zeta, rng)
        h = bandwidth
        if h is None:
            s_star = model.sep_param if model.sep_param is not None else 1.0
            h = rs.prescribed_h(sigma, s_star)
        pol = rs.Policy(kind, h=min(max(h, 0.0), 2.0), alpha=alpha,
                        distance=distance.replace("-", "_"))
        result = rs.simulate(model, n_users, horizon, pol, rng, record_log=True)
        frac = result.likable_fraction(n_users)
        for t in range(1, horizon + 1):
            report.add(record="reward", seed_index=run, t=t, policy=policy,
                       cum_likable=float(result.cum_likable[t - 1]),
                       likable_fraction=float(frac[t - 1]),
                       mean_cum_rating=float(result.mean_cum_rating[t - 1]))
        last_ratings = result.final_ratings
    report.write(out)
    if ratings_out and last_ratings is not None:
        dataio.write_ratings(ratings_out, last_ratings)
    if figures_dir:
        figures.render_cf_experiment(report.records, figures_dir)


if __name__ == "__main__":
    main()

"""Figure rendering for CLI reports.

Each subcommand gets one renderer that turns its report records into a PNG
saved next to the delimited output.  Rendering is strictly opt-in (the
--figures-dir flag); report bytes never depend on it.
"""

from __future__ import annotations

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, figures_dir, name: str) -> str:
    out = Path(figures_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def render_bench_search(records: List[dict], figures_dir) -> str:
    recalls = [r["recall"] for r in records if "recall" in r]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(recalls, bins=20, range=(0, 1), color="steelblue", edgecolor="black")
    ax.set_xlabel("recall@k")
    ax.set_ylabel("queries")
    ax.set_title("Per-query recall")
    return _finish(fig, figures_dir, "bench_search_recall.png")


def render_query(records: List[dict], figures_dir) -> str:
    xs = [r["query"] for r in records if "value" in r]
    ys = [r["value"] for r in records if "value" in r]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(xs, ys, "o-", ms=3, color="darkorange")
    ax.set_xlabel("query index")
    ax.set_ylabel("prediction")
    ax.set_title("Predictions")
    return _finish(fig, figures_dir, "query_predictions.png")


def render_verify_lsh(records: List[dict], figures_dir) -> str:
    true_d = [r["true_distance"] for r in records if "true_distance" in r]
    found_d = [r["found_distance"] for r in records if "found_distance" in r]
    bound = records[0].get("bound_factor", 3.0) if records else 3.0
    fig, ax = plt.subplots(figsize=(4.2, 4))
    ax.scatter(true_d, found_d, s=8, alpha=0.4, color="seagreen")
    top = max(true_d + found_d) if true_d else 1.0
    xs = [0, top]
    ax.plot(xs, xs, "k--", lw=1, label="found = true")
    ax.plot(xs, [bound * x for x in xs], "r-", lw=1,
            label=f"c(1+gamma) = {bound:g}")
    ax.set_xlabel("true 1-NN distance")
    ax.set_ylabel("ladder distance")
    ax.legend(fontsize=8)
    return _finish(fig, figures_dir, "verify_lsh_distances.png")


def render_verify_bounds(records: List[dict], figures_dir) -> str:
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    fracs = [r["success_fraction"] for r in records if "success_fraction" in r]
    targets = [1.0 - r["delta"] for r in records if "delta" in r]
    ax.bar(range(len(fracs)), fracs, color="slateblue", label="observed")
    for i, t in enumerate(targets):
        ax.hlines(t, i - 0.4, i + 0.4, color="red", label="1 - delta" if i == 0 else None)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("success fraction")
    ax.set_xticks(range(len(fracs)))
    ax.legend(fontsize=8)
    return _finish(fig, figures_dir, "verify_bounds.png")


def render_ts_experiment(records: List[dict], figures_dir) -> str:
    methods = sorted({r["method"] for r in records if "method" in r})
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for method in methods:
        pts = sorted((r["T"], r["error_rate_mean"]) for r in records
                     if r.get("method") == method)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=4, label=method)
    ax.set_xlabel("initial time steps T")
    ax.set_ylabel("error rate")
    ax.set_title("Classification error vs T")
    ax.legend(fontsize=8)
    return _finish(fig, figures_dir, "ts_experiment_error_vs_t.png")


def render_cf_experiment(records: List[dict], figures_dir) -> str:
    by_seed: dict = {}
    for r in records:
        if "t" in r and "likable_fraction" in r:
            by_seed.setdefault(r["seed_index"], []).append((r["t"], r["likable_fraction"]))
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for seed_index, pts in sorted(by_seed.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], alpha=0.5, lw=1)
    ax.set_xlabel("time step t")
    ax.set_ylabel("cumulative likable fraction")
    ax.set_title("Reward trajectories")
    return _finish(fig, figures_dir, "cf_experiment_reward.png")

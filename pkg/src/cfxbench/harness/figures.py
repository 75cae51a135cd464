"""Static PNG rendering for report and positional tables.

Figures are a reading aid over the delimited output, not a data source:
everything plotted is recomputable from the CSVs, and filenames are
deterministic so reruns overwrite in place.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_METRIC_LABELS = {
    "pos_p": "POS-P",
    "neg_p": "NEG-P",
    "pn_s": "PN-S",
    "pn_r": "PN-R",
    "gini": "Gini",
    "num_perturb": "#Perturb",
    "wall_time_s": "wall time (s)",
}


def _label(metric: str) -> str:
    return _METRIC_LABELS.get(metric, metric)


def _slug(*parts) -> str:
    return "_".join(str(p).replace("/", "-") for p in parts)


def _bar_figure(rows, metric, level, k, out_dir) -> str:
    names = [r.explainer for r in rows]
    means = [r.mean for r in rows]
    stds = [r.std for r in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(names)), 3.2))
    x = range(len(names))
    ax.bar(x, means, yerr=stds, capsize=3, color="#4878a8")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel(_label(metric))
    ax.set_title(f"{_label(metric)}  ({level} level, K={k})")
    fig.tight_layout()
    path = os.path.join(out_dir, _slug("bar", metric, level, f"k{k}") + ".png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _positional_figure(rows, metric, k, out_dir) -> str:
    by_explainer = defaultdict(list)
    for r in rows:
        by_explainer[r.explainer].append(r)
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    for name, group in by_explainer.items():
        group = sorted(group, key=lambda r: r.position)
        ax.plot(
            [g.position for g in group],
            [g.mean for g in group],
            marker="o",
            label=name,
        )
    ax.set_xlabel("recommendation position")
    ax.set_ylabel(_label(metric))
    ax.set_title(f"{_label(metric)} by position (K={k})")
    ax.set_xticks(sorted({r.position for r in rows}))
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, _slug("position", metric, f"k{k}") + ".png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _scope_figure(rows, metric, level, k, out_dir) -> str:
    scopes = sorted({r.scope for r in rows})
    names = sorted({r.explainer for r in rows})
    lookup = {(r.explainer, r.scope): r.mean for r in rows}
    width = 0.8 / len(scopes)
    fig, ax = plt.subplots(figsize=(max(4.0, 1.3 * len(names)), 3.2))
    for j, scope in enumerate(scopes):
        xs = [i + j * width for i in range(len(names))]
        ys = [lookup.get((n, scope), math.nan) for n in names]
        ax.bar(xs, ys, width=width, label=scope)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(names))])
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel(_label(metric))
    ax.set_title(f"{_label(metric)} by scope ({level} level, K={k})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(out_dir, _slug("scope", metric, level, f"k{k}") + ".png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_figures(rows, positional, out_dir) -> list:
    """Render every applicable figure; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    plottable = [
        r
        for r in rows
        if r.metric not in ("unsupported",) and not math.isnan(r.mean)
    ]
    groups = defaultdict(list)
    for r in plottable:
        groups[(r.metric, r.level, r.k)].append(r)
    for (metric, level, k), group in sorted(groups.items()):
        scopes = {r.scope for r in group}
        if len(scopes) > 1:
            paths.append(_scope_figure(group, metric, level, k, out_dir))
            continue
        # one bar per explainer; formats never collide on a metric id
        paths.append(_bar_figure(group, metric, level, k, out_dir))
    pos_groups = defaultdict(list)
    for r in positional:
        if not math.isnan(r.mean) and r.metric != "wall_time_s":
            pos_groups[(r.metric, r.k)].append(r)
    for (metric, k), group in sorted(pos_groups.items()):
        paths.append(_positional_figure(group, metric, k, out_dir))
    return paths

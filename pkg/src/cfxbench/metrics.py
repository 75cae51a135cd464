"""Evaluation metrics for counterfactual explanations.

All rank-based metrics take a ``rank_of(state, item) -> int`` callable so
they stay independent of any concrete recommender; the harness binds it to
a model and a frozen candidate pool. Ranks are 1-based.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

METRIC_IDS = ("pos_p", "neg_p", "pn_s", "pn_r", "gini", "num_perturb", "wall_time_s")

# Direction used by grid search when optimizing a metric id.
HIGHER_IS_BETTER = {
    "pos_p": False,  # masking important interactions should displace the item
    "neg_p": True,  # masking unimportant ones should keep it ranked
    "pn_s": True,
    "pn_r": True,
    "gini": True,
    "num_perturb": False,
    "wall_time_s": False,
}


def pos_p_item(
    rank_of: Callable, states: Sequence, target: int, k: int
) -> float:
    """Fraction of perturbation steps at which the target stays in the top-k.

    ``states`` are the perturbed inputs x^(t) for t = 1..T with the
    highest-scored interactions removed first; lower is better.
    """
    if not states:
        raise ValueError("empty perturbation sequence")
    hits = sum(1 for s in states if rank_of(s, target) <= k)
    return hits / len(states)


def pos_p_list(
    rank_of: Callable, states: Sequence, topk_items: Sequence, k: int
) -> float:
    """List-level variant: average retention of the original top-k members."""
    if not states:
        raise ValueError("empty perturbation sequence")
    if len(topk_items) != k:
        raise ValueError(f"expected {k} original top-k items, got {len(topk_items)}")
    hits = 0
    for s in states:
        for item in topk_items:
            if rank_of(s, item) <= k:
                hits += 1
    return hits / (len(states) * k)


def neg_p_item(
    rank_of: Callable, states: Sequence, target: int, k: int
) -> float:
    """Same sum as pos_p_item but over the least-important-first sequence.

    Higher is better: removing unimportant interactions should not
    displace the target.
    """
    return pos_p_item(rank_of, states, target, k)


def neg_p_list(
    rank_of: Callable, states: Sequence, topk_items: Sequence, k: int
) -> float:
    return pos_p_list(rank_of, states, topk_items, k)


def pn_s_item(rank_of: Callable, state, target: int, k: int) -> float:
    """1 if the counterfactual state pushed the target out of the top-k."""
    return 1.0 if rank_of(state, target) > k else 0.0


def pn_s_list(rank_of: Callable, state, topk_items: Sequence, k: int) -> float:
    """Fraction of original top-k members displaced by the counterfactual."""
    if len(topk_items) != k:
        raise ValueError(f"expected {k} original top-k items, got {len(topk_items)}")
    out = sum(1 for item in topk_items if rank_of(state, item) > k)
    return out / k


def pn_r_list(rank_of: Callable, state, topk_items: Sequence, k: int) -> float:
    """Rank-weighted displacement of the original top-k (1 = fully displaced).

    Retained members contribute 1/log2(rank + 1) at their new rank; the sum
    is normalized by the ideal value where every member keeps position.
    """
    if len(topk_items) != k:
        raise ValueError(f"expected {k} original top-k items, got {len(topk_items)}")
    retained = 0.0
    for item in topk_items:
        rank = rank_of(state, item)
        if rank <= k:
            retained += 1.0 / np.log2(rank + 1.0)
    ideal = sum(1.0 / np.log2(pos + 1.0) for pos in range(1, k + 1))
    return 1.0 - retained / ideal


def gini(scores) -> float:
    """Gini concentration of a mask's importance scores.

    Scores are min-max normalized and sorted ascending; an all-equal mask
    (no spread) is defined as 0. Higher means importance is concentrated
    on few interactions.
    """
    m = np.asarray(scores, dtype=np.float64)
    if m.ndim != 1 or m.size == 0:
        raise ValueError("scores must be a non-empty 1-d array")
    if not np.all(np.isfinite(m)):
        raise ValueError("scores must be finite")
    lo, hi = m.min(), m.max()
    if lo == hi:
        return 0.0
    norm = np.sort((m - lo) / (hi - lo))
    total = norm.sum()
    n = norm.size
    positions = np.arange(1, n + 1, dtype=np.float64)
    weighted = norm / total * (n - positions + 0.5) / n
    return float(1.0 - 2.0 * weighted.sum())


def num_perturb(original_items: Iterable, perturbed_items: Iterable, symmetric: bool = False) -> int:
    """Count of the user's interactions flipped by the perturbation.

    The default counts only positions inside the original history (removals),
    matching the evaluation protocol this suite reproduces; ``symmetric=True``
    opts into counting additions outside the history as well.
    """
    orig = set(original_items)
    pert = set(perturbed_items)
    removed = len(orig - pert)
    if symmetric:
        return removed + len(pert - orig)
    return removed


def rank_curve(rank_of: Callable, states: Sequence, item: int) -> np.ndarray:
    """Ranks of ``item`` along a perturbation sequence, for diagnostics."""
    return np.array([rank_of(s, item) for s in states], dtype=np.int64)

"""Exact influence-based counterfactual removal with a mask byproduct.

Each round re-scores the target and its would-be replacement with every
single remaining interaction deleted, removes the one that most shrinks
the score gap, and stops on a verified flip. The first-round gap
reductions double as an importance mask over the full history.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..recommenders import Recommender
from .base import ExplanationTarget, ExplicitPerturbation, ImplicitMask


@dataclass(frozen=True)
class AccentConfig:
    max_removals: int = 0  # 0 means up to the whole history


def explain_accent(
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
    candidates: Sequence,
    config: AccentConfig = AccentConfig(),
) -> tuple:
    """Greedy exact-rescoring removal; item level only.

    Returns (ExplicitPerturbation, ImplicitMask); the mask comes from the
    first pass and covers the whole original history even when the removal
    search stops early.
    """
    if target.level != "item":
        raise ValueError("this explainer supports item-level targets only")
    user = target.user
    items = tuple(int(i) for i in history)
    if not items:
        raise ValueError("cannot explain an empty history")
    kept = list(items)
    removed: list = []
    queries = 0
    budget = config.max_removals if config.max_removals > 0 else len(items)
    first_pass: dict = {}

    while True:
        ranked = model.rank_list(user, kept, candidates)
        queries += 1
        if ranked.rank_of(target.item) > target.k:
            success = True
            break
        if len(removed) >= budget or not kept or len(ranked) <= target.k:
            success = False
            break
        replacement = int(ranked.items[target.k])
        pair = [target.item, replacement]
        base = model.score_items(user, kept, pair)
        queries += 1
        gap = float(base[0] - base[1])
        reductions = []
        for j in kept:
            trimmed = [i for i in kept if i != j]
            s = model.score_items(user, trimmed, pair)
            queries += 1
            reductions.append((gap - float(s[0] - s[1]), j))
        if not removed:
            first_pass = {j: value for value, j in reductions}
        reductions.sort(key=lambda pair: (-pair[0], pair[1]))
        best = reductions[0][1]
        kept.remove(best)
        removed.append(best)

    if not first_pass:
        # The target was already out of the top-k; influence is undefined
        # but a mask is still owed. Score everything as zero.
        first_pass = {j: 0.0 for j in items}
    mask = ImplicitMask(
        items=items, scores=np.array([first_pass[j] for j in items])
    )
    perturbation = ExplicitPerturbation(
        user=user,
        removed_edges=tuple((user, i) for i in removed),
        success=success,
        queries_used=queries,
    )
    return perturbation, mask

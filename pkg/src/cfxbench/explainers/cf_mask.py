"""Gradient-optimized edge masks with three thresholding disciplines.

All variants minimize hinge(score(target) - score(contender) + margin)
plus beta * sum(1 - w) over the scope's edges, by projected gradient
descent on w in [0, 1]. The flip term stays active until the thresholded
mask actually flips the ranking: soft scores can satisfy the margin while
every weight still sits above the removal threshold, and deactivating
there would stall the mask short of a usable counterfactual. Variants
differ in when the mask is discretized:

- cfgnn: threshold after every step, keep the smallest verified flip seen
- cf2: stay continuous, threshold once at the end
- c2ste: forward passes use the hard mask, gradients flow straight through

Removal sets are always verified against the actual recommender.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..diffkit import grad_score_wrt_edge_mask, grad_score_wrt_user_vector
from ..recommenders import Recommender, order_desc
from ..recommenders.lightgcn import LightGCNModel
from ..recommenders.mf import MFModel
from ..scopes import PerturbationScope
from .base import ExplanationTarget, ExplicitPerturbation

VARIANTS = ("cfgnn", "cf2", "c2ste")


@dataclass(frozen=True)
class CFMaskConfig:
    steps: int = 100
    lr: float = 0.1
    beta: float = 0.5
    margin_frac: float = 0.01  # of the initial candidate score spread
    threshold: float = 0.5


def _scope_grad(model, user, history, scope_edges, weights, item) -> np.ndarray:
    """d score(item) / d scope weights at the given mask point."""
    if isinstance(model, LightGCNModel):
        return grad_score_wrt_edge_mask(
            model, weights, user, item, edges=scope_edges
        ).values
    if isinstance(model, MFModel):
        hist = list(history)
        pos = {it: j for j, it in enumerate(hist)}
        hist_w = np.ones(len(hist))
        touched = []
        for e, (eu, ei) in enumerate(scope_edges):
            if eu == user and ei in pos:
                hist_w[pos[ei]] = weights[e]
                touched.append((e, pos[ei]))
        hist_grad = grad_score_wrt_user_vector(model, hist, hist_w, item)
        grad = np.zeros(len(scope_edges))
        for e, j in touched:
            grad[e] = hist_grad[j]
        return grad
    raise TypeError(f"no mask gradient for model kind {model.kind!r}")


def _flip_check(model, target, removed_edges, candidates) -> bool:
    ranked = model.rank_list_with_removed_edges(target.user, removed_edges, candidates)
    if target.level == "item":
        return ranked.rank_of(target.item) > target.k
    return all(ranked.rank_of(i) > target.k for i in target.topk)


def explain_cf_mask(
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
    candidates: Sequence,
    scope: PerturbationScope,
    config: CFMaskConfig = CFMaskConfig(),
    variant: str = "cfgnn",
) -> ExplicitPerturbation:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    user = target.user
    scope_edges = scope.edges
    if not scope_edges:
        return ExplicitPerturbation(user=user, removed_edges=(), success=False)
    members = [target.item] if target.level == "item" else list(target.topk)
    cand = np.asarray(sorted(candidates), dtype=np.int64)
    if cand.size <= target.k:
        return ExplicitPerturbation(user=user, removed_edges=(), success=False)

    queries = 0
    base_scores = model.score_items(user, history, cand)
    queries += 1
    spread = float(base_scores.max() - base_scores.min())
    margin = max(config.margin_frac * spread, 1e-9)

    w = np.ones(len(scope_edges))
    best_removed = None
    flip_cache = {(): False}  # empty removal never flips an in-list target

    def hard_removed(mask):
        return tuple(
            scope_edges[e]
            for e in range(len(scope_edges))
            if mask[e] < config.threshold
        )

    def flipped(removed):
        nonlocal queries
        if removed not in flip_cache:
            queries += 1
            flip_cache[removed] = _flip_check(model, target, removed, cand)
        return flip_cache[removed]

    for _ in range(config.steps):
        removed_now = hard_removed(w)
        flipped_hard = flipped(removed_now)
        if variant == "cfgnn" and flipped_hard:
            if best_removed is None or len(removed_now) < len(best_removed):
                best_removed = removed_now

        w_fwd = np.where(w >= config.threshold, 1.0, 0.0) if variant == "c2ste" else w
        scores = model.scores_under_edge_weights(
            user, history, scope_edges, w_fwd, cand
        )
        queries += 1
        grad = np.full(len(scope_edges), -config.beta)
        for member in members:
            others_mask = cand != member
            others = cand[others_mask]
            other_scores = scores[others_mask]
            order = order_desc(others, other_scores)
            contender = int(others[order[target.k - 1]])
            tau = float(other_scores[order[target.k - 1]])
            s_member = float(scores[cand == member][0])
            if s_member - tau + margin > 0 or not flipped_hard:
                g_m = _scope_grad(model, user, history, scope_edges, w_fwd, member)
                g_c = _scope_grad(model, user, history, scope_edges, w_fwd, contender)
                grad += (g_m - g_c) / len(members)
        w = np.clip(w - config.lr * grad, 0.0, 1.0)

    removed = hard_removed(w)
    if variant == "cfgnn":
        if flipped(removed) and (
            best_removed is None or len(removed) < len(best_removed)
        ):
            best_removed = removed
        if best_removed is not None:
            return ExplicitPerturbation(
                user=user,
                removed_edges=best_removed,
                success=True,
                queries_used=queries,
            )
        return ExplicitPerturbation(
            user=user, removed_edges=removed, success=False, queries_used=queries
        )
    success = flipped(removed)
    return ExplicitPerturbation(
        user=user, removed_edges=removed, success=success, queries_used=queries
    )

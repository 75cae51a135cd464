"""Amortized mask network trained against the recommender.

A TinyMLP maps (binary history vector ++ user representation) to per-item
mask logits. The loss keeps the target's score under the masked-in
history, suppresses it under the complement, and an L1 term keeps masks
sparse. Once trained, explaining a user is a single forward pass; the
explicit variant thresholds the raw sigmoid outputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..diffkit import TinyMLP, grad_score_wrt_edge_mask, grad_score_wrt_user_vector
from ..recommenders import Recommender, candidate_pool
from ..recommenders.lightgcn import LightGCNModel
from ..recommenders.mf import MFModel
from .base import ExplanationTarget, ExplicitPerturbation, ImplicitMask


@dataclass(frozen=True)
class LXRConfig:
    hidden_dim: int = 64
    epochs: int = 100
    lr: float = 0.01
    lambda_pos: float = 1.0
    lambda_neg: float = 1.0
    l1: float = 0.05
    threshold: float = 0.5
    seed: int = 0


def user_representation(model: Recommender, user: int, history: Sequence) -> np.ndarray:
    if isinstance(model, MFModel):
        return model.user_vector(history)
    if isinstance(model, LightGCNModel):
        return model.propagate()[0][user]
    raise TypeError(f"no user representation for model kind {model.kind!r}")


def masked_score_grad(
    model: Recommender, user: int, history, weights: np.ndarray, item: int
) -> tuple:
    """(score, d score / d weights) under the model's continuous relaxation."""
    if isinstance(model, MFModel):
        score = model.scores_for_weighted_history(history, weights, [item])[0]
        grad = grad_score_wrt_user_vector(model, history, weights, item)
        return float(score), grad
    if isinstance(model, LightGCNModel):
        edges = [(user, i) for i in history]
        score = model.scores_under_edge_weights(user, history, edges, weights, [item])[0]
        grad = grad_score_wrt_edge_mask(model, weights, user, item, edges=edges)
        return float(score), grad.values
    raise TypeError(f"no masked scoring for model kind {model.kind!r}")


class LXRNetwork:
    """Trained mask network plus the shapes it expects."""

    def __init__(self, net: TinyMLP, num_items: int, rep_dim: int, pretrain_seconds: float):
        self.net = net
        self.num_items = num_items
        self.rep_dim = rep_dim
        self.pretrain_seconds = pretrain_seconds

    def mask_scores(self, model: Recommender, user: int, history: Sequence) -> np.ndarray:
        x = np.zeros(self.num_items + self.rep_dim)
        hist = np.asarray(list(history), dtype=np.int64)
        x[hist] = 1.0
        x[self.num_items :] = user_representation(model, user, history)
        out, _ = self.net.forward(x)
        return out[hist]


def _softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def _sigmoid(x: float) -> float:
    return float(1.0 / (1.0 + np.exp(-x))) if x >= 0 else float(np.exp(x) / (1.0 + np.exp(x)))


def train_lxr(
    model: Recommender,
    train_users: Sequence,
    histories: Sequence,
    config: LXRConfig = LXRConfig(),
) -> LXRNetwork:
    """Train the mask network on the given users' histories.

    ``histories[j]`` is the history for ``train_users[j]``. The training
    target per user is their frozen top-1 recommendation.
    """
    num_items = model.num_items
    rep_dim = model.dim
    started = time.perf_counter()
    net = TinyMLP(num_items + rep_dim, config.hidden_dim, num_items, seed=config.seed)
    rng = np.random.default_rng(config.seed)

    usable = [
        (int(u), tuple(int(i) for i in h))
        for u, h in zip(train_users, histories)
        if len(h) > 0 and len(h) < num_items
    ]
    targets = {}
    for user, hist in usable:
        pool = candidate_pool(num_items, hist)
        targets[user] = int(model.rank_list(user, hist, pool).items[0])

    adam_m = {k: np.zeros_like(v) for k, v in net.params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in net.params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    for _ in range(config.epochs):
        order = rng.permutation(len(usable))
        for idx in order:
            user, hist = usable[idx]
            target = targets[user]
            hist_arr = np.asarray(hist, dtype=np.int64)
            x = np.zeros(num_items + rep_dim)
            x[hist_arr] = 1.0
            x[num_items:] = user_representation(model, user, hist)
            out, cache = net.forward(x)
            m = out[hist_arr]

            f_pos, g_pos = masked_score_grad(model, user, hist, m, target)
            f_neg, g_neg = masked_score_grad(model, user, hist, 1.0 - m, target)
            d_pos = -config.lambda_pos * _sigmoid(-f_pos)
            d_neg = config.lambda_neg * _sigmoid(f_neg)
            grad_m = d_pos * g_pos - d_neg * g_neg + config.l1

            grad_out = np.zeros(num_items)
            grad_out[hist_arr] = grad_m
            grads, _ = net.backward(cache, grad_out)

            step += 1
            for name, grad in grads.items():
                adam_m[name] = beta1 * adam_m[name] + (1 - beta1) * grad
                adam_v[name] = beta2 * adam_v[name] + (1 - beta2) * grad * grad
                m_hat = adam_m[name] / (1 - beta1**step)
                v_hat = adam_v[name] / (1 - beta2**step)
                net.params[name][...] -= config.lr * m_hat / (np.sqrt(v_hat) + eps)

    return LXRNetwork(net, num_items, rep_dim, time.perf_counter() - started)


def explain_lxr(
    network: LXRNetwork,
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
) -> ImplicitMask:
    """One forward pass; the mask covers exactly the user's history."""
    items = tuple(int(i) for i in history)
    if not items:
        raise ValueError("cannot explain an empty history")
    scores = network.mask_scores(model, target.user, items)
    return ImplicitMask(items=items, scores=scores)


def lxr_removal_set(mask: ImplicitMask, threshold: float = 0.5) -> tuple:
    """Items whose raw mask output clears the threshold, ascending."""
    return tuple(
        int(i) for i, s in zip(mask.items, mask.scores) if s > threshold
    )


def explain_lxr_explicit(
    network: LXRNetwork,
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
    candidates: Sequence,
    threshold: float = 0.5,
) -> ExplicitPerturbation:
    """Threshold the mask into a removal set and verify it flips the outcome."""
    mask = explain_lxr(network, model, target, history)
    removed = lxr_removal_set(mask, threshold)
    kept = [i for i in history if i not in set(removed)]
    queries = 0
    success = False
    if removed:
        ranked = model.rank_list(target.user, kept, candidates)
        queries = 1
        if target.level == "item":
            success = ranked.rank_of(target.item) > target.k
        else:
            success = all(ranked.rank_of(i) > target.k for i in target.topk)
    return ExplicitPerturbation(
        user=target.user,
        removed_edges=tuple((target.user, i) for i in removed),
        success=success,
        queries_used=queries,
    )

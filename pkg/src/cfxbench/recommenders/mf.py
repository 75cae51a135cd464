"""Fold-in matrix factorization trained with BPR.

The model keeps no user table: a user is represented by the mean embedding
of the items they interacted with, so perturbing the history immediately
perturbs the scores. An empty history degrades to ranking by item bias.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..data import InteractionMatrix
from ..errors import TrainingError
from . import Recommender, TrainConfig, TrainLog

_EPS = 1e-12


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


class MFModel(Recommender):
    kind = "mf"

    def __init__(
        self,
        item_embeddings: np.ndarray,
        item_bias: np.ndarray,
        graph: Optional[InteractionMatrix] = None,
    ):
        q = np.asarray(item_embeddings, dtype=np.float64)
        b = np.asarray(item_bias, dtype=np.float64)
        if q.ndim != 2 or b.shape != (q.shape[0],):
            raise ValueError("item_embeddings must be (m, d) with bias of length m")
        self.item_embeddings = q
        self.item_bias = b
        self.graph = graph
        self.num_items = q.shape[0]
        self.num_users = graph.num_users if graph is not None else 0
        self.dim = q.shape[1]

    def user_vector(self, history: Sequence) -> np.ndarray:
        """Mean of the interacted item embeddings; zeros for empty history."""
        hist = np.asarray(list(history), dtype=np.int64)
        if hist.size == 0:
            return np.zeros(self.dim)
        return self.item_embeddings[hist].mean(axis=0)

    def weighted_user_vector(self, history: Sequence, weights: np.ndarray) -> np.ndarray:
        """Weight-normalized mean, the continuous relaxation of the fold-in."""
        hist = np.asarray(list(history), dtype=np.int64)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (hist.size,):
            raise ValueError("weights must align with history")
        total = w.sum()
        if total <= _EPS:
            return np.zeros(self.dim)
        return (w[:, None] * self.item_embeddings[hist]).sum(axis=0) / total

    def score_items(self, user: int, history, items: Sequence) -> np.ndarray:
        idx = np.asarray(list(items), dtype=np.int64)
        u_vec = self.user_vector(history)
        return self.item_embeddings[idx] @ u_vec + self.item_bias[idx]

    def scores_for_weighted_history(
        self, history: Sequence, weights: np.ndarray, items: Sequence
    ) -> np.ndarray:
        idx = np.asarray(list(items), dtype=np.int64)
        u_vec = self.weighted_user_vector(history, weights)
        return self.item_embeddings[idx] @ u_vec + self.item_bias[idx]

    def scores_under_edge_weights(
        self, user: int, history, edges: Sequence, weights: np.ndarray, items: Sequence
    ) -> np.ndarray:
        """Map edge weights onto the fold-in; edges not touching ``user`` are inert."""
        hist = list(history)
        w = np.ones(len(hist))
        pos = {item: j for j, item in enumerate(hist)}
        for (eu, ei), weight in zip(edges, np.asarray(weights, dtype=np.float64)):
            if eu == user and ei in pos:
                w[pos[ei]] = weight
        return self.scores_for_weighted_history(hist, w, items)

    def scores_with_removed_edges(
        self, user: int, removed_edges: Sequence, items: Sequence
    ) -> np.ndarray:
        if self.graph is None:
            raise ValueError("model has no training graph attached")
        dropped = {i for u, i in removed_edges if u == user}
        kept = [i for i in self.graph.items_of(user) if i not in dropped]
        return self.score_items(user, kept, items)


def _val_recall(
    model: MFModel,
    train: InteractionMatrix,
    val: Sequence,
    k: int,
) -> Optional[float]:
    """Mean Recall@k over users holding out validation items; None if no val."""
    q = model.item_embeddings
    recalls = []
    for user in range(train.num_users):
        held = val[user]
        if not held:
            continue
        hist = train.user_items[user]
        scores = q @ model.user_vector(hist) + model.item_bias
        if hist:
            scores[np.asarray(hist, dtype=np.int64)] = -np.inf
        k_eff = min(k, scores.size)
        top = np.argpartition(-scores, k_eff - 1)[:k_eff]
        recalls.append(len(set(int(t) for t in top) & set(held)) / len(held))
    if not recalls:
        return None
    return float(np.mean(recalls))


def train_mf(
    train: InteractionMatrix,
    val: Sequence,
    config: TrainConfig = TrainConfig(),
) -> tuple:
    """BPR-train the fold-in model with early stopping on val Recall@k.

    The positive item is left out of its own fold-in during training so the
    model cannot score an item against itself. Returns (model, TrainLog).
    """
    rng = np.random.default_rng(config.seed)
    m, d = train.num_items, config.dim
    q = rng.normal(0.0, 0.01, size=(m, d))
    bias = np.zeros(m)
    edges = train.edges()
    hist_arrays = [np.asarray(row, dtype=np.int64) for row in train.user_items]
    hist_sets = [set(row) for row in train.user_items]

    best_recall = -np.inf
    best_state = (q.copy(), bias.copy())
    best_epoch = 0
    recall_log = []
    stale = 0
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(edges))
        for idx in order:
            u, i = int(edges[idx, 0]), int(edges[idx, 1])
            j = int(rng.integers(m))
            while j in hist_sets[u]:
                j = int(rng.integers(m))
            hist = hist_arrays[u]
            loo = hist[hist != i]
            if loo.size:
                u_vec = q[loo].mean(axis=0)
            else:
                u_vec = np.zeros(d)
            diff = u_vec @ (q[i] - q[j]) + bias[i] - bias[j]
            if not np.isfinite(diff):
                raise TrainingError("BPR objective produced a non-finite score", epoch)
            g = _sigmoid(-diff)  # descent magnitude on -log sigmoid(diff)
            lr = config.lr
            grad_hist = (q[i] - q[j]) * (g / max(loo.size, 1))
            q[i] += lr * (g * u_vec - config.reg * q[i])
            q[j] += lr * (-g * u_vec - config.reg * q[j])
            if loo.size:
                q[loo] += lr * (grad_hist - config.reg * q[loo])
            bias[i] += lr * (g - config.reg * bias[i])
            bias[j] += lr * (-g - config.reg * bias[j])

        model = MFModel(q, bias, graph=train)
        recall = _val_recall(model, train, val, config.val_k)
        recall_log.append(recall if recall is not None else np.nan)
        if recall is None:
            # No holdout to monitor: keep the latest state, run all epochs.
            best_state = (q.copy(), bias.copy())
            best_epoch = epoch
            continue
        if recall > best_recall:
            best_recall = recall
            best_state = (q.copy(), bias.copy())
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped_early = True
                break

    q, bias = best_state
    log = TrainLog(
        val_recall=tuple(recall_log), best_epoch=best_epoch, stopped_early=stopped_early
    )
    return MFModel(q, bias, graph=train), log

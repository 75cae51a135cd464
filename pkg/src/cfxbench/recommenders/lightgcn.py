"""LightGCN over the bipartite interaction graph, with per-edge masking.

Propagation is linear: each layer multiplies the stacked user/item
embedding table by the symmetrically normalized adjacency, and the final
representation is the mean over layers 0..L. The normalization
1/sqrt(d_u * d_i) is frozen from the unperturbed training graph, so edge
removal at evaluation time reweights the walk without renormalizing.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from ..data import InteractionMatrix
from ..errors import TrainingError
from . import Recommender, TrainConfig, TrainLog


class LightGCNModel(Recommender):
    kind = "lightgcn"

    def __init__(
        self,
        user_embeddings: np.ndarray,
        item_embeddings: np.ndarray,
        graph: InteractionMatrix,
        num_layers: int = 2,
    ):
        if num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        eu = np.asarray(user_embeddings, dtype=np.float64)
        ei = np.asarray(item_embeddings, dtype=np.float64)
        if eu.ndim != 2 or ei.ndim != 2 or eu.shape[1] != ei.shape[1]:
            raise ValueError("embedding tables must be 2-d with a common dim")
        if eu.shape[0] != graph.num_users or ei.shape[0] != graph.num_items:
            raise ValueError("embedding tables must match the graph dimensions")
        self.user_embeddings = eu
        self.item_embeddings = ei
        self.graph = graph
        self.num_layers = num_layers
        self.num_users = graph.num_users
        self.num_items = graph.num_items
        self.dim = eu.shape[1]
        self.norm_coef = edge_norm_coefficients(graph)
        self._clean_final = None

    # -- propagation ---------------------------------------------------

    def _adjacency(self, edge_weights: Optional[np.ndarray] = None) -> sparse.csr_matrix:
        n, m = self.num_users, self.num_items
        edges = self.graph.edges()
        values = self.norm_coef if edge_weights is None else self.norm_coef * edge_weights
        rows = np.concatenate([edges[:, 0], n + edges[:, 1]])
        cols = np.concatenate([n + edges[:, 1], edges[:, 0]])
        data = np.concatenate([values, values])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n + m, n + m))

    def propagate(self, edge_weights: Optional[np.ndarray] = None) -> tuple:
        """Final (user, item) embeddings under an optional per-edge weight vector."""
        if edge_weights is None and self._clean_final is not None:
            return self._clean_final
        if edge_weights is not None:
            w = np.asarray(edge_weights, dtype=np.float64)
            if w.shape != (self.graph.num_interactions,):
                raise ValueError("edge_weights must cover every training edge")
        adj = self._adjacency(None if edge_weights is None else w)
        base = np.vstack([self.user_embeddings, self.item_embeddings])
        acc = base.copy()
        layer = base
        for _ in range(self.num_layers):
            layer = adj @ layer
            acc += layer
        acc /= self.num_layers + 1
        final = (acc[: self.num_users], acc[self.num_users :])
        if edge_weights is None:
            self._clean_final = final
        return final

    def _weights_for_removed(self, removed_edges: Sequence) -> Optional[np.ndarray]:
        if not removed_edges:
            return None
        w = np.ones(self.graph.num_interactions)
        for u, i in removed_edges:
            w[self.graph.edge_id(int(u), int(i))] = 0.0
        return w

    # -- scoring -------------------------------------------------------

    def score_items(self, user: int, history, items: Sequence) -> np.ndarray:
        """Score under a (possibly reduced) history for ``user``.

        The history must be a subset of the user's training items; missing
        ones are treated as deleted edges.
        """
        train_items = set(self.graph.items_of(user))
        hist = set(history)
        extra = hist - train_items
        if extra:
            raise ValueError(f"history adds unseen items {sorted(extra)}")
        removed = [(user, i) for i in sorted(train_items - hist)]
        return self.scores_with_removed_edges(user, removed, items)

    def scores_with_removed_edges(
        self, user: int, removed_edges: Sequence, items: Sequence
    ) -> np.ndarray:
        users_fin, items_fin = self.propagate(self._weights_for_removed(removed_edges))
        idx = np.asarray(list(items), dtype=np.int64)
        return items_fin[idx] @ users_fin[user]

    def scores_under_edge_weights(
        self, user: int, history, edges: Sequence, weights: np.ndarray, items: Sequence
    ) -> np.ndarray:
        """Continuous mask on the listed edges of the clean training graph."""
        w = np.ones(self.graph.num_interactions)
        for (eu, ei), weight in zip(edges, np.asarray(weights, dtype=np.float64)):
            w[self.graph.edge_id(int(eu), int(ei))] = weight
        users_fin, items_fin = self.propagate(w)
        idx = np.asarray(list(items), dtype=np.int64)
        return items_fin[idx] @ users_fin[user]


def edge_norm_coefficients(graph: InteractionMatrix) -> np.ndarray:
    """Frozen symmetric normalization 1/sqrt(d_u * d_i) per training edge."""
    edges = graph.edges()
    du = np.array([len(graph.user_items[u]) for u in edges[:, 0]], dtype=np.float64)
    di = np.array([len(graph.item_users[i]) for i in edges[:, 1]], dtype=np.float64)
    return 1.0 / np.sqrt(du * di)


def _val_recall(users_fin, items_fin, train: InteractionMatrix, val, k: int):
    recalls = []
    for user in range(train.num_users):
        held = val[user]
        if not held:
            continue
        scores = items_fin @ users_fin[user]
        hist = train.user_items[user]
        if hist:
            scores[np.asarray(hist, dtype=np.int64)] = -np.inf
        k_eff = min(k, scores.size)
        top = np.argpartition(-scores, k_eff - 1)[:k_eff]
        recalls.append(len(set(int(t) for t in top) & set(held)) / len(held))
    return float(np.mean(recalls)) if recalls else None


def train_lightgcn(
    train: InteractionMatrix,
    val: Sequence,
    config: TrainConfig = TrainConfig(),
) -> tuple:
    """Full-batch BPR with Adam on the base embedding tables.

    Propagation is linear in the base table, so the exact gradient w.r.t.
    the bases is the layer-mean of adjacency powers applied to the gradient
    at the final embeddings (the adjacency is symmetric).
    """
    rng = np.random.default_rng(config.seed)
    n, m, d = train.num_users, train.num_items, config.dim
    model = LightGCNModel(
        rng.normal(0.0, 0.01, size=(n, d)),
        rng.normal(0.0, 0.01, size=(m, d)),
        train,
        num_layers=config.num_layers,
    )
    adj = model._adjacency()
    base = np.vstack([model.user_embeddings, model.item_embeddings])
    edges = train.edges()
    hist_sets = [set(row) for row in train.user_items]

    adam_m = np.zeros_like(base)
    adam_v = np.zeros_like(base)
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    best_recall = -np.inf
    best_base = base.copy()
    best_epoch = 0
    recall_log = []
    stale = 0
    stopped_early = False

    def propagate_mean(table):
        acc = table.copy()
        layer = table
        for _ in range(config.num_layers):
            layer = adj @ layer
            acc += layer
        return acc / (config.num_layers + 1)

    for epoch in range(1, config.max_epochs + 1):
        final = propagate_mean(base)
        users_fin, items_fin = final[:n], final[n:]
        u_idx = edges[:, 0]
        i_idx = edges[:, 1]
        j_idx = rng.integers(m, size=len(edges))
        for row in range(len(edges)):  # resample collisions with the history
            while int(j_idx[row]) in hist_sets[int(u_idx[row])]:
                j_idx[row] = rng.integers(m)
        s_pos = np.einsum("ij,ij->i", users_fin[u_idx], items_fin[i_idx])
        s_neg = np.einsum("ij,ij->i", users_fin[u_idx], items_fin[j_idx])
        diff = s_pos - s_neg
        if not np.all(np.isfinite(diff)):
            raise TrainingError("BPR objective produced non-finite scores", epoch)
        g = -1.0 / (1.0 + np.exp(diff))  # dL/d(diff), L = -log sigmoid(diff)

        grad_final = np.zeros_like(final)
        np.add.at(grad_final, u_idx, g[:, None] * (items_fin[i_idx] - items_fin[j_idx]))
        np.add.at(grad_final, n + i_idx, g[:, None] * users_fin[u_idx])
        np.add.at(grad_final, n + j_idx, -g[:, None] * users_fin[u_idx])
        grad = propagate_mean(grad_final) / len(edges) + config.reg * base

        adam_m = beta1 * adam_m + (1 - beta1) * grad
        adam_v = beta2 * adam_v + (1 - beta2) * grad * grad
        m_hat = adam_m / (1 - beta1**epoch)
        v_hat = adam_v / (1 - beta2**epoch)
        base -= config.lr * m_hat / (np.sqrt(v_hat) + eps)

        final = propagate_mean(base)
        recall = _val_recall(final[:n], final[n:], train, val, config.val_k)
        recall_log.append(recall if recall is not None else np.nan)
        if recall is None:
            best_base = base.copy()
            best_epoch = epoch
            continue
        if recall > best_recall:
            best_recall = recall
            best_base = base.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped_early = True
                break

    trained = LightGCNModel(
        best_base[:n], best_base[n:], train, num_layers=config.num_layers
    )
    log = TrainLog(
        val_recall=tuple(recall_log), best_epoch=best_epoch, stopped_early=stopped_early
    )
    return trained, log

"""Analytic gradients used by the mask-optimizing explainers.

Everything here is differentiated by hand and checked against the central
finite-difference oracle, which is part of the public surface so callers
can re-verify on their own models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NumericError
from .recommenders.lightgcn import LightGCNModel
from .recommenders.mf import MFModel

FD_STEP = 1e-4
REL_TOL = 1e-4
ABS_FLOOR = 1e-7

_EPS = 1e-12


@dataclass(frozen=True)
class MaskGradient:
    """Gradient of a score w.r.t. per-edge mask weights."""

    edges: tuple  # ((u, i), ...) the weights refer to
    values: np.ndarray


def finite_difference(f: Callable, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient oracle for a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for j in range(x.size):
        hi = x.copy()
        lo = x.copy()
        hi[j] += step
        lo[j] -= step
        grad[j] = (f(hi) - f(lo)) / (2.0 * step)
    return grad


def grad_close(
    analytic: np.ndarray,
    numeric: np.ndarray,
    rel: float = REL_TOL,
    abs_floor: float = ABS_FLOOR,
) -> bool:
    """Per-coordinate closeness with a relative tolerance and absolute floor."""
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(a), np.abs(b))
    return bool(np.all(np.abs(a - b) <= np.maximum(abs_floor, rel * scale)))


def grad_score_wrt_user_vector(
    model: MFModel, history: Sequence, weights: np.ndarray, item: int
) -> np.ndarray:
    """Gradient of the weight-normalized fold-in score w.r.t. the weights.

    With u(w) = sum_j w_j q_j / sum_j w_j the derivative is
    (q_j - u(w)) . q_i / sum(w). An all-zero weight vector scores from the
    zero vector, where the mask has no local effect: the gradient is 0.
    """
    hist = np.asarray(list(history), dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (hist.size,):
        raise ValueError("weights must align with history")
    total = w.sum()
    if total <= _EPS:
        return np.zeros_like(w)
    q = model.item_embeddings
    u_vec = (w[:, None] * q[hist]).sum(axis=0) / total
    return (q[hist] @ q[item] - u_vec @ q[item]) / total


def grad_score_wrt_edge_mask(
    model: LightGCNModel,
    mask: np.ndarray,
    user: int,
    item: int,
    edges: Optional[Sequence] = None,
) -> MaskGradient:
    """Reverse accumulation through masked propagation.

    ``edges`` selects the (u, i) pairs the mask covers; every other edge is
    held at weight 1. Omitting it differentiates w.r.t. all training edges.
    """
    graph = model.graph
    num_edges = graph.num_interactions
    all_edges = graph.edges()
    if edges is None:
        edge_ids = np.arange(num_edges)
        edge_pairs = tuple((int(u), int(i)) for u, i in all_edges)
    else:
        edge_pairs = tuple((int(u), int(i)) for u, i in edges)
        edge_ids = np.array([graph.edge_id(u, i) for u, i in edge_pairs], dtype=np.int64)
    w_sub = np.asarray(mask, dtype=np.float64)
    if w_sub.shape != (len(edge_ids),):
        raise ValueError("mask must align with the requested edges")
    full_w = np.ones(num_edges)
    full_w[edge_ids] = w_sub

    n = model.num_users
    L = model.num_layers
    adj = model._adjacency(full_w)
    layers = [np.vstack([model.user_embeddings, model.item_embeddings])]
    for _ in range(L):
        layers.append(adj @ layers[-1])
    final = sum(layers) / (L + 1)

    seed = np.zeros_like(final)
    seed[user] = final[n + item] / (L + 1)
    seed[n + item] = final[user] / (L + 1)

    src = all_edges[:, 0]
    dst = n + all_edges[:, 1]
    coef = model.norm_coef
    grad_full = np.zeros(num_edges)
    g = seed.copy()
    for l in range(L, 0, -1):
        below = layers[l - 1]
        grad_full += coef * (
            np.einsum("ij,ij->i", g[src], below[dst])
            + np.einsum("ij,ij->i", g[dst], below[src])
        )
        g = adj @ g + seed  # adjacency is symmetric
    if not np.all(np.isfinite(grad_full)):
        raise NumericError("edge-mask gradient is not finite")
    return MaskGradient(edges=edge_pairs, values=grad_full[edge_ids])


class TinyMLP:
    """Two-layer perceptron (tanh hidden, sigmoid output) with manual backprop."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.w1 = rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(hidden_dim, in_dim))
        self.b1 = np.zeros(hidden_dim)
        self.w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden_dim), size=(out_dim, hidden_dim))
        self.b2 = np.zeros(out_dim)

    @property
    def params(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def forward(self, x: np.ndarray) -> tuple:
        """Returns (output, cache); cache feeds :meth:`backward`."""
        x = np.asarray(x, dtype=np.float64)
        z1 = self.w1 @ x + self.b1
        h = np.tanh(z1)
        z2 = self.w2 @ h + self.b2
        out = 1.0 / (1.0 + np.exp(-z2))
        if not np.all(np.isfinite(out)):
            raise NumericError("non-finite activation in TinyMLP forward")
        return out, (x, h, out)

    def backward(self, cache: tuple, grad_out: np.ndarray) -> tuple:
        """Gradients for a scalar loss given dL/d(output).

        Returns (param_grads, grad_input).
        """
        x, h, out = cache
        dz2 = np.asarray(grad_out, dtype=np.float64) * out * (1.0 - out)
        grads = {
            "w2": np.outer(dz2, h),
            "b2": dz2,
        }
        dh = self.w2.T @ dz2
        dz1 = dh * (1.0 - h * h)
        grads["w1"] = np.outer(dz1, x)
        grads["b1"] = dz1
        grad_input = self.w1.T @ dz1
        for g in grads.values():
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient in TinyMLP backward")
        return grads, grad_input

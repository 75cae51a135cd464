"""Shapley-value masks over the user's history.

Small histories are solved by exact subset enumeration; larger ones fall
back to Monte-Carlo permutation sampling. Both routes satisfy the
efficiency axiom (the values sum to v(full) - v(empty)) by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..recommenders import Recommender
from .base import ExplanationTarget, ImplicitMask


@dataclass(frozen=True)
class ShapConfig:
    n_permutations: int = 32
    exact_limit: int = 12  # exhaustive enumeration up to this history size
    seed: int = 0


def _value_function(model, target, items):
    value_items = [target.item] if target.level == "item" else list(target.topk)
    cache = {}

    def value(bitmask: int) -> float:
        if bitmask not in cache:
            kept = [items[j] for j in range(len(items)) if bitmask >> j & 1]
            scores = model.score_items(target.user, kept, value_items)
            cache[bitmask] = float(scores.mean())
        return cache[bitmask]

    return value


def _exact_shapley(value, n: int) -> np.ndarray:
    phi = np.zeros(n)
    # weight of a coalition of size s joining player j: 1 / (n * C(n-1, s)).
    weights = [1.0 / (n * math.comb(n - 1, s)) for s in range(n)]
    for mask in range(1 << n):
        size = bin(mask).count("1")
        for j in range(n):
            if mask >> j & 1:
                continue
            phi[j] += weights[size] * (value(mask | 1 << j) - value(mask))
    return phi


def _sampled_shapley(value, n: int, n_permutations: int, rng) -> np.ndarray:
    phi = np.zeros(n)
    for _ in range(n_permutations):
        order = rng.permutation(n)
        mask = 0
        prev = value(0)
        for j in order:
            mask |= 1 << int(j)
            cur = value(mask)
            phi[j] += cur - prev
            prev = cur
    return phi / n_permutations


def explain_shap(
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
    config: ShapConfig = ShapConfig(),
) -> ImplicitMask:
    """Shapley attribution of the target score over history interactions."""
    items = tuple(int(i) for i in history)
    n = len(items)
    if n == 0:
        raise ValueError("cannot explain an empty history")
    value = _value_function(model, target, items)
    if n <= config.exact_limit:
        phi = _exact_shapley(value, n)
    else:
        rng = np.random.default_rng(config.seed)
        phi = _sampled_shapley(value, n, config.n_permutations, rng)
    return ImplicitMask(items=items, scores=phi)

"""Shared fixtures: stub models and planted instances for explainer tests."""

import numpy as np
import pytest

from cfxbench.data import InteractionMatrix
from cfxbench.recommenders import LightGCNModel, MFModel


class LinearStub:
    """Duck-typed model whose score is exactly additive in the kept history.

    score(item | kept) = bias[item] + sum of weights[j] over kept history
    items j. The per-item contribution table makes surrogate-recovery
    oracles trivial to hand-check.
    """

    kind = "stub"

    def __init__(self, weights: dict, bias: dict = None):
        self.weights = dict(weights)
        self.bias = dict(bias or {})

    def score_items(self, user, history, items):
        contribution = sum(self.weights.get(j, 0.0) for j in history)
        return np.array(
            [self.bias.get(int(i), 0.0) + contribution for i in items]
        )


@pytest.fixture
def linear_stub():
    return LinearStub


def make_planted_mf():
    """Fold-in MF where item 0 in the history props up target item 3.

    d=2. History items: 0 (aligned with the target) and 1 (orthogonal).
    Candidates are 3 (target) and 4 (runner-up with moderate bias).
    Removing item 0 drops the target below the runner-up.
    """
    q = np.array(
        [
            [1.0, 0.0],  # history item aligned with target
            [0.0, 1.0],  # history item orthogonal to target
            [0.0, 0.0],  # filler
            [4.0, 0.0],  # target: scores 2.0 with full history, 0 without item 0
            [0.0, 0.4],  # runner-up, small bias below
        ]
    )
    b = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    graph = InteractionMatrix(1, 5, ((0, 1),))
    return MFModel(q, b, graph=graph)


@pytest.fixture
def planted_mf():
    return make_planted_mf()


def exhaustive_min_flips(model, target, candidates, scope_edges, max_size=2):
    """Oracle: all removal subsets of size <= max_size that flip the target."""
    import itertools

    flips = []
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(scope_edges, size):
            ranked = model.rank_list_with_removed_edges(
                target.user, combo, candidates
            )
            if target.level == "item":
                flipped = ranked.rank_of(target.item) > target.k
            else:
                flipped = all(ranked.rank_of(i) > target.k for i in target.topk)
            if flipped:
                flips.append(combo)
    return flips


@pytest.fixture
def min_flip_oracle():
    return exhaustive_min_flips


def random_lightgcn(seed, n_users=3, n_items=4, dim=3, layers=2, density=0.6):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_users):
        picks = [i for i in range(n_items) if rng.random() < density]
        if not picks:
            picks = [int(rng.integers(n_items))]
        rows.append(tuple(sorted(picks)))
    graph = InteractionMatrix(n_users, n_items, tuple(rows))
    model = LightGCNModel(
        rng.normal(size=(n_users, dim)),
        rng.normal(size=(n_items, dim)),
        graph,
        num_layers=layers,
    )
    return model, graph


@pytest.fixture
def lightgcn_factory():
    return random_lightgcn

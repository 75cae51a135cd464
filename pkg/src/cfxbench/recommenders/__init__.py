"""Recommender contracts shared by the explainers and the harness.

A model scores items for a user state. The state is the user's (possibly
perturbed) interaction history plus, for graph models, a per-edge weight
vector over the training graph. Ranking is always descending score with
ties broken by ascending item index, 1-based.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 32
    lr: float = 0.05
    reg: float = 1e-4
    max_epochs: int = 200
    patience: int = 20
    seed: int = 0
    val_k: int = 20
    num_layers: int = 2  # graph models only


@dataclass(frozen=True)
class TrainLog:
    val_recall: tuple
    best_epoch: int
    stopped_early: bool


@dataclass
class RankedList:
    """Items in descending score order; ties resolved by ascending item id."""

    items: np.ndarray
    scores: np.ndarray
    _positions: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._positions = {int(i): p + 1 for p, i in enumerate(self.items)}

    def rank_of(self, item: int) -> int:
        try:
            return self._positions[int(item)]
        except KeyError:
            raise ValueError(f"item {item} is not in the ranked candidate pool")

    def head(self, k: int) -> tuple:
        return tuple(int(i) for i in self.items[:k])

    def __len__(self) -> int:
        return len(self.items)


def order_desc(candidates: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Indices sorting scores descending, ties by ascending candidate id."""
    return np.lexsort((candidates, -scores))


class Recommender(ABC):
    """Scoring contract; concrete models are fold-in MF and LightGCN."""

    kind: str = ""
    num_users: int
    num_items: int
    dim: int

    @abstractmethod
    def score_items(self, user: int, history: Sequence, items: Sequence) -> np.ndarray:
        """Scores of ``items`` for ``user`` whose current history is ``history``."""

    @abstractmethod
    def scores_under_edge_weights(
        self,
        user: int,
        history,
        edges: Sequence,
        weights: np.ndarray,
        items: Sequence,
    ) -> np.ndarray:
        """Scores with a continuous weight on each listed (u, i) training edge.

        Unlisted edges keep weight 1; ``history`` is the unperturbed history
        (fold-in models apply the weights there, graph models mask the
        training graph directly). This is the relaxation the mask optimizers
        differentiate through.
        """

    def rank_list(self, user: int, history, candidates: Sequence) -> RankedList:
        cand = np.asarray(sorted(candidates), dtype=np.int64)
        if cand.size == 0:
            raise ValueError("empty candidate pool")
        scores = self.score_items(user, history, cand)
        order = order_desc(cand, scores)
        return RankedList(items=cand[order], scores=scores[order])

    def top_k(self, user: int, history, candidates: Sequence, k: int) -> tuple:
        return self.rank_list(user, history, candidates).head(k)

    def rank_list_with_removed_edges(
        self, user: int, removed_edges: Sequence, candidates: Sequence
    ) -> RankedList:
        """Ranking after deleting ``removed_edges`` ((u, i) pairs) from the graph."""
        cand = np.asarray(sorted(candidates), dtype=np.int64)
        if cand.size == 0:
            raise ValueError("empty candidate pool")
        scores = self.scores_with_removed_edges(user, removed_edges, cand)
        order = order_desc(cand, scores)
        return RankedList(items=cand[order], scores=scores[order])

    @abstractmethod
    def scores_with_removed_edges(
        self, user: int, removed_edges: Sequence, items: Sequence
    ) -> np.ndarray:
        """Scores after hard-deleting the given (u, i) edges from the graph."""


def candidate_pool(num_items: int, history: Sequence) -> np.ndarray:
    """All items outside the (original) history, ascending."""
    mask = np.ones(num_items, dtype=bool)
    hist = np.asarray(list(history), dtype=np.int64)
    if hist.size:
        mask[hist] = False
    return np.flatnonzero(mask).astype(np.int64)


def make_recommender(kind: str, **kwargs) -> "Recommender":
    from .lightgcn import LightGCNModel
    from .mf import MFModel

    kinds = {"mf": MFModel, "lightgcn": LightGCNModel}
    if kind not in kinds:
        raise ConfigError(f"unknown recommender kind {kind!r}")
    return kinds[kind](**kwargs)


from .io import load_checkpoint, save_checkpoint  # noqa: E402
from .lightgcn import LightGCNModel, train_lightgcn  # noqa: E402
from .mf import MFModel, train_mf  # noqa: E402

__all__ = [
    "Recommender",
    "RankedList",
    "TrainConfig",
    "TrainLog",
    "MFModel",
    "LightGCNModel",
    "train_mf",
    "train_lightgcn",
    "save_checkpoint",
    "load_checkpoint",
    "candidate_pool",
    "make_recommender",
    "order_desc",
]

"""Shared explanation types and the mask-to-sequence builder."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

LEVELS = ("item", "list")


@dataclass(frozen=True)
class ExplanationTarget:
    """What a single explanation call is about.

    ``topk`` is the user's original top-k recommendation (frozen before any
    perturbation); at item level ``item`` is the member being explained, at
    list level the whole list is the target and ``item`` is None.
    """

    user: int
    level: str
    k: int
    topk: tuple
    item: Optional[int] = None

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level!r}")
        if len(self.topk) != self.k:
            raise ValueError(f"topk must have length {self.k}")
        if self.level == "item":
            if self.item is None:
                raise ValueError("item-level target needs an item")
            if self.item not in self.topk:
                raise ValueError("target item must be a member of the original top-k")
        elif self.item is not None:
            raise ValueError("list-level target must not name a single item")


@dataclass(frozen=True)
class ImplicitMask:
    """Importance scores over the user's history, aligned with ``items``."""

    items: tuple
    scores: np.ndarray
    flagged: bool = False  # set when a degraded estimation path was taken

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.shape != (len(self.items),):
            raise ValueError("scores must align one-to-one with items")
        if not np.all(np.isfinite(scores)):
            raise ValueError("mask scores must be finite")
        object.__setattr__(self, "scores", scores)

    def score_of(self, item: int) -> float:
        return float(self.scores[self.items.index(item)])


@dataclass(frozen=True)
class ExplicitPerturbation:
    """A removal set plus whether it verifiably flipped the outcome."""

    user: int
    removed_edges: tuple  # ((user, item), ...) graph edges deleted
    success: bool
    queries_used: int = 0

    def removed_items(self, user: Optional[int] = None) -> tuple:
        """Items the explained user lost, ascending; other edges are ignored."""
        who = self.user if user is None else user
        return tuple(sorted(i for u, i in self.removed_edges if u == who))


@dataclass(frozen=True)
class PerturbationSequence:
    """Cumulative removal schedule derived from a mask.

    ``steps[t-1]`` is the kept history after step t; step T is always the
    empty history.
    """

    items: tuple
    direction: str
    steps: tuple = field(default=())

    def kept_at(self, t: int) -> tuple:
        return self.steps[t - 1]


def removal_counts(n: int, num_steps: int) -> list:
    """Cumulative removals per step: round-half-up of t * n / T."""
    return [int(np.floor(t * n / num_steps + 0.5)) for t in range(1, num_steps + 1)]


def build_perturbation_sequence(
    mask: ImplicitMask, num_steps: int, direction: str
) -> PerturbationSequence:
    """Turn a mask into the cumulative removal schedule the metrics consume.

    ``pos`` removes the highest-scored interactions first, ``neg`` the
    lowest-scored; score ties break by ascending item index so an all-equal
    mask degrades to ascending-index removal in both directions.
    """
    if direction not in ("pos", "neg"):
        raise ValueError(f"direction must be 'pos' or 'neg', got {direction!r}")
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    items = np.asarray(mask.items, dtype=np.int64)
    scores = mask.scores
    if direction == "pos":
        order = np.lexsort((items, -scores))
    else:
        order = np.lexsort((items, scores))
    ordered = [int(items[j]) for j in order]
    steps = []
    for count in removal_counts(len(ordered), num_steps):
        kept = ordered[count:]
        steps.append(tuple(sorted(kept)))
    return PerturbationSequence(
        items=tuple(int(i) for i in mask.items),
        direction=direction,
        steps=tuple(steps),
    )

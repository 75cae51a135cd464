"""Seeded uniform-random masks, the sanity baseline for mask metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import ExplanationTarget, ImplicitMask


@dataclass(frozen=True)
class RandomMaskConfig:
    seed: int = 0


def explain_random(
    target: ExplanationTarget,
    history: Sequence,
    config: RandomMaskConfig = RandomMaskConfig(),
) -> ImplicitMask:
    items = tuple(int(i) for i in history)
    if not items:
        raise ValueError("cannot explain an empty history")
    rng = np.random.default_rng(config.seed)
    return ImplicitMask(items=items, scores=rng.random(len(items)))

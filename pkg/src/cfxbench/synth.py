"""Seeded synthetic data: clustered implicit feedback and planted flip cases.

The interaction generator draws users and items from latent clusters so a
factorization model trained on the output has real structure to recover.
The planted-instance generator builds tiny propagation models whose edge
masks carry strong per-edge gradients, for validating explicit explainers
against exhaustive removal oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import InteractionMatrix, RawRating
from .recommenders.lightgcn import LightGCNModel


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 300
    n_items: int = 120
    n_clusters: int = 6
    mean_degree: float = 12.0
    min_degree: int = 3
    cross_affinity: float = 0.08  # relative pick weight for off-cluster items
    seed: int = 0


def synth_interactions(config: SynthConfig = SynthConfig()) -> InteractionMatrix:
    """Clustered bipartite interactions, deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    user_cluster = rng.integers(config.n_clusters, size=config.n_users)
    item_cluster = rng.integers(config.n_clusters, size=config.n_items)
    rows = []
    for u in range(config.n_users):
        count = int(rng.poisson(config.mean_degree))
        count = max(config.min_degree, min(count, config.n_items))
        weights = np.where(
            item_cluster == user_cluster[u], 1.0, config.cross_affinity
        )
        p = weights / weights.sum()
        items = rng.choice(config.n_items, size=count, replace=False, p=p)
        rows.append(tuple(sorted(int(i) for i in items)))
    return InteractionMatrix(
        num_users=config.n_users,
        num_items=config.n_items,
        user_items=tuple(rows),
    )


def synth_ratings(
    config: SynthConfig = SynthConfig(),
    positive_rating: float = 5.0,
    negative_rating: float = 2.0,
    noise_fraction: float = 0.3,
) -> list:
    """Raw rating records for exercising the preprocessing path end to end.

    Every synthetic interaction becomes a positive rating; on top of that a
    seeded fraction of random (user, item) pairs get sub-threshold ratings,
    which the strict rating filter must drop.
    """
    matrix = synth_interactions(config)
    rng = np.random.default_rng(config.seed + 1)
    ratings = []
    stamp = 0
    for u in range(matrix.num_users):
        for i in matrix.items_of(u):
            ratings.append(RawRating(str(u), str(i), positive_rating, stamp))
            stamp += 1
    n_noise = int(noise_fraction * len(ratings))
    for _ in range(n_noise):
        u = int(rng.integers(matrix.num_users))
        i = int(rng.integers(matrix.num_items))
        ratings.append(RawRating(str(u), str(i), negative_rating, stamp))
        stamp += 1
    return ratings


def write_ratings(ratings, path: str, fmt: str = "tsv") -> None:
    """Serialize raw ratings in one of the supported delimited formats."""
    from .data import FORMAT_SEPARATORS

    sep = FORMAT_SEPARATORS[fmt]
    with open(path, "w", encoding="utf-8") as fh:
        for r in ratings:
            stamp = r.timestamp if r.timestamp is not None else 0
            fh.write(f"{r.user}{sep}{r.item}{sep}{r.rating}{sep}{stamp}\n")


def planted_flip_instance(
    seed: int,
    n_users: int = 3,
    n_items: int = 4,
    dim: int = 3,
    num_layers: int = 2,
    density: float = 0.5,
    scale: float = 4.0,
):
    """A small propagation model where single-edge removals move scores a lot.

    Embeddings are scaled up so per-edge mask gradients clear the sparsity
    weight of the mask optimizers; at unit scale the gradients are mostly
    too small for any weight to leave the w = 1 clip.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_users):
        picks = [i for i in range(n_items) if rng.random() < density]
        if not picks:
            picks = [int(rng.integers(n_items))]
        rows.append(tuple(sorted(picks)))
    graph = InteractionMatrix(n_users, n_items, tuple(rows))
    model = LightGCNModel(
        scale * rng.normal(size=(n_users, dim)),
        scale * rng.normal(size=(n_items, dim)),
        graph,
        num_layers=num_layers,
    )
    return model, graph

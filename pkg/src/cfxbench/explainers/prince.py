"""Greedy counterfactual removal ranked by personalized-PageRank margins.

Candidate actions are single interactions of the explained user. Each
round scores every remaining action by how much PPR mass it sends to the
current target versus the would-be replacement, removes the best one, and
re-queries the actual recommender; only a verified rank flip counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from ..data import InteractionMatrix
from ..errors import NumericError
from ..recommenders import Recommender
from .base import ExplanationTarget, ExplicitPerturbation


@dataclass(frozen=True)
class PrinceConfig:
    alpha: float = 0.15  # restart probability
    ppr_eps: float = 1e-10
    ppr_max_iter: int = 1000
    max_removals: int = 0  # 0 means up to the whole history


def _walk_matrix(graph: InteractionMatrix, removed: frozenset) -> sparse.csr_matrix:
    """Row-stochastic random-walk matrix; isolated nodes get a self-loop."""
    n, m = graph.num_users, graph.num_items
    rows, cols = [], []
    for u, i in graph.edges():
        if (int(u), int(i)) in removed:
            continue
        rows.append(int(u))
        cols.append(n + int(i))
        rows.append(n + int(i))
        cols.append(int(u))
    size = n + m
    degree = np.zeros(size)
    for r in rows:
        degree[r] += 1.0
    data = []
    for r in rows:
        data.append(1.0 / degree[r])
    for node in range(size):
        if degree[node] == 0:
            rows.append(node)
            cols.append(node)
            data.append(1.0)
    return sparse.csr_matrix((data, (rows, cols)), shape=(size, size))


def personalized_pagerank(
    graph: InteractionMatrix,
    restart_node: int,
    alpha: float = 0.15,
    eps: float = 1e-10,
    max_iter: int = 1000,
    removed: frozenset = frozenset(),
    reverse: bool = False,
) -> np.ndarray:
    """Power-iterated PPR vector with restart at ``restart_node``.

    ``reverse=True`` computes the contribution of every start node to the
    restart node instead (the transpose problem, used for action margins).
    """
    walk = _walk_matrix(graph, removed)
    op = walk if reverse else walk.T.tocsr()
    size = walk.shape[0]
    e = np.zeros(size)
    e[restart_node] = 1.0
    p = e.copy()
    for _ in range(max_iter):
        nxt = alpha * e + (1.0 - alpha) * (op @ p)
        delta = np.abs(nxt - p).sum()
        p = nxt
        if delta < eps:
            return p
    raise NumericError(f"PPR power iteration did not converge within {max_iter} steps")


def explain_prince(
    model: Recommender,
    graph: InteractionMatrix,
    target: ExplanationTarget,
    history: Sequence,
    candidates: Sequence,
    config: PrinceConfig = PrinceConfig(),
) -> ExplicitPerturbation:
    """Greedy PPR-guided removal; item level only."""
    if target.level != "item":
        raise ValueError("this explainer supports item-level targets only")
    user = target.user
    n = graph.num_users
    kept = [int(i) for i in history]
    removed: list = []
    queries = 0
    budget = config.max_removals if config.max_removals > 0 else len(kept)

    while True:
        ranked = model.rank_list(user, kept, candidates)
        queries += 1
        if ranked.rank_of(target.item) > target.k:
            return ExplicitPerturbation(
                user=user,
                removed_edges=tuple((user, i) for i in removed),
                success=True,
                queries_used=queries,
            )
        if len(removed) >= budget or not kept or len(ranked) <= target.k:
            return ExplicitPerturbation(
                user=user,
                removed_edges=tuple((user, i) for i in removed),
                success=False,
                queries_used=queries,
            )
        replacement = int(ranked.items[target.k])  # first item outside the top-k
        gone = frozenset((user, i) for i in removed)
        to_target = personalized_pagerank(
            graph,
            n + target.item,
            config.alpha,
            config.ppr_eps,
            config.ppr_max_iter,
            removed=gone,
            reverse=True,
        )
        to_replacement = personalized_pagerank(
            graph,
            n + replacement,
            config.alpha,
            config.ppr_eps,
            config.ppr_max_iter,
            removed=gone,
            reverse=True,
        )
        margins = [(to_target[n + i] - to_replacement[n + i], i) for i in kept]
        margins.sort(key=lambda pair: (-pair[0], pair[1]))
        best = margins[0][1]
        kept.remove(best)
        removed.append(best)

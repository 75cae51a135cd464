"""Monte-Carlo tree search over connected edge-removal subsets.

States are subsets of the scope's edges that stay connected to the
explained user; expanding a node adds one frontier edge. A node's reward
is measured directly on the recommender: the fraction of the original
top-k displaced once the subset is removed. Search stops at the first
full displacement or after the iteration budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..recommenders import Recommender
from ..scopes import PerturbationScope
from .base import ExplanationTarget, ExplicitPerturbation


@dataclass(frozen=True)
class UNRConfig:
    n_iterations: int = 200
    c_uct: float = 1.4
    max_size: int = 5
    seed: int = 0


@dataclass
class _Node:
    state: frozenset
    reward: float
    untried: list
    visits: int = 0
    value: float = 0.0
    children: dict = field(default_factory=dict)

    def uct_child(self, c: float):
        log_n = np.log(max(self.visits, 1))
        best, best_score = None, -np.inf
        for child in self.children.values():
            score = child.value / child.visits + c * np.sqrt(log_n / child.visits)
            if score > best_score:
                best, best_score = child, score
        return best


def _touched_nodes(user: int, state: frozenset) -> set:
    nodes = {("u", user)}
    for eu, ei in state:
        nodes.add(("u", eu))
        nodes.add(("i", ei))
    return nodes


def _frontier(user: int, state: frozenset, scope_edges: tuple, max_size: int) -> list:
    if len(state) >= max_size:
        return []
    nodes = _touched_nodes(user, state)
    return [
        e
        for e in scope_edges
        if e not in state and (("u", e[0]) in nodes or ("i", e[1]) in nodes)
    ]


def explain_unr(
    model: Recommender,
    target: ExplanationTarget,
    history: Sequence,
    candidates: Sequence,
    scope: PerturbationScope,
    config: UNRConfig = UNRConfig(),
) -> ExplicitPerturbation:
    user = target.user
    members = [target.item] if target.level == "item" else list(target.topk)
    queries = 0

    def displacement(state: frozenset) -> float:
        nonlocal queries
        ranked = model.rank_list_with_removed_edges(user, tuple(sorted(state)), candidates)
        queries += 1
        out = sum(1 for m in members if ranked.rank_of(m) > target.k)
        return out / len(members)

    root_frontier = _frontier(user, frozenset(), scope.edges, config.max_size)
    if not root_frontier:
        return ExplicitPerturbation(user=user, removed_edges=(), success=False)

    rng = np.random.default_rng(config.seed)
    root = _Node(state=frozenset(), reward=0.0, untried=root_frontier)
    best_state: Optional[frozenset] = None
    best_key = (-1.0, 0, 0)  # (reward, -size, -discovery_index) maximized
    discovered = 0

    for _ in range(config.n_iterations):
        node = root
        path = [root]
        while not node.untried and node.children:
            node = node.uct_child(config.c_uct)
            path.append(node)
        if node.untried:
            pick = int(rng.integers(len(node.untried)))
            edge = node.untried.pop(pick)
            state = node.state | {edge}
            child = _Node(
                state=state,
                reward=displacement(state),
                untried=_frontier(user, state, scope.edges, config.max_size),
            )
            node.children[edge] = child
            node = child
            path.append(node)
            discovered += 1
            key = (node.reward, -len(state), -discovered)
            if key > best_key:
                best_key = key
                best_state = state
        reward = node.reward
        for visited in path:
            visited.visits += 1
            visited.value += reward
        if reward >= 1.0:
            break

    if best_state is None:
        return ExplicitPerturbation(
            user=user, removed_edges=(), success=False, queries_used=queries
        )
    return ExplicitPerturbation(
        user=user,
        removed_edges=tuple(sorted(best_state)),
        success=best_key[0] >= 1.0,
        queries_used=queries,
    )

"""Perturbation scopes: which training edges an explainer may touch.

Scopes nest: user_only is contained in k_hop for any k >= 1, k_hop in
full, and indirect in k_hop at the same k. The bipartite graph is walked
with plain BFS; nodes are users then items offset by num_users.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .data import InteractionMatrix
from .errors import ConfigError

SCOPE_KINDS = ("full", "k_hop", "indirect", "user_only")


@dataclass(frozen=True)
class PerturbationScope:
    kind: str
    hops: int
    edges: tuple  # ((user, item), ...) in graph edge order

    def __len__(self) -> int:
        return len(self.edges)

    def edge_set(self) -> frozenset:
        return frozenset(self.edges)


def _bfs_distances(graph: InteractionMatrix, start: int, cutoff: int) -> dict:
    """Hop distances from ``start`` (node id, items offset by num_users)."""
    n = graph.num_users
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        node = frontier.popleft()
        d = dist[node]
        if d >= cutoff:
            continue
        if node < n:
            neighbors = (n + i for i in graph.items_of(node))
        else:
            neighbors = iter(graph.users_of(node - n))
        for nxt in neighbors:
            if nxt not in dist:
                dist[nxt] = d + 1
                frontier.append(nxt)
    return dist


def extract_scope(
    graph: InteractionMatrix,
    user: int,
    targets: Sequence,
    kind: str,
    hops: int = 2,
) -> PerturbationScope:
    """Edges the explainer may perturb for (user, targets).

    ``targets`` are the item ids under explanation (one at item level, the
    original top-k at list level). An edge belongs to a node's k-hop
    neighborhood when one endpoint sits at BFS distance < k from it;
    ``indirect`` keeps edges lying on user-to-target walks of length
    <= 2 * hops, which may legitimately be empty for distant pairs.
    """
    if kind not in SCOPE_KINDS:
        raise ConfigError(f"unknown scope kind {kind!r}, expected one of {SCOPE_KINDS}")
    if hops < 1:
        raise ConfigError("hops must be >= 1")
    if not 0 <= user < graph.num_users:
        raise ConfigError(f"user {user} out of range")
    for t in targets:
        if not 0 <= t < graph.num_items:
            raise ConfigError(f"target item {t} out of range")

    all_edges = [(int(u), int(i)) for u, i in graph.edges()]
    n = graph.num_users

    if kind == "full":
        kept = all_edges
    elif kind == "user_only":
        kept = [(u, i) for u, i in all_edges if u == user]
    elif kind == "k_hop":
        centers = [user] + [n + t for t in targets]
        kept = []
        dists = [_bfs_distances(graph, c, hops) for c in centers]
        for u, i in all_edges:
            nodes = (u, n + i)
            if any(
                d.get(node, hops + 1) < hops for d in dists for node in nodes
            ):
                kept.append((u, i))
    else:  # indirect
        limit = 2 * hops
        du = _bfs_distances(graph, user, limit)
        kept_set = set()
        for t in targets:
            dt = _bfs_distances(graph, n + t, limit)
            for u, i in all_edges:
                a, b = u, n + i
                if du.get(a, limit + 1) + 1 + dt.get(b, limit + 1) <= limit:
                    kept_set.add((u, i))
                elif du.get(b, limit + 1) + 1 + dt.get(a, limit + 1) <= limit:
                    kept_set.add((u, i))
        kept = [e for e in all_edges if e in kept_set]

    return PerturbationScope(kind=kind, hops=hops, edges=tuple(kept))

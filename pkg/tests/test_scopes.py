"""Scope extraction tests: hand-walked chains plus nesting properties."""

import numpy as np
import pytest

from cfxbench.data import InteractionMatrix
from cfxbench.errors import ConfigError
from cfxbench.scopes import extract_scope


def chain_graph():
    # u0 - i0 - u1 - i1 - u2 - i2 (a path when viewed as a bipartite graph).
    return InteractionMatrix(3, 3, ((0,), (0, 1), (1, 2)))


def random_bipartite(rng, n_users, n_items, density):
    rows = []
    for _ in range(n_users):
        picks = [i for i in range(n_items) if rng.random() < density]
        rows.append(tuple(sorted(picks)))
    return InteractionMatrix(n_users, n_items, tuple(rows))


class TestHandWalkedChain:
    def test_full_is_every_edge(self):
        g = chain_graph()
        scope = extract_scope(g, 0, [2], "full", hops=1)
        assert scope.edges == tuple((int(u), int(i)) for u, i in g.edges())

    def test_user_only(self):
        g = chain_graph()
        scope = extract_scope(g, 1, [2], "user_only", hops=3)
        assert scope.edges == ((1, 0), (1, 1))

    def test_k_hop_one(self):
        g = chain_graph()
        # One hop from u0 reaches edge (0,0); one hop from target i2 reaches
        # edge (2,2); nothing else qualifies.
        scope = extract_scope(g, 0, [2], "k_hop", hops=1)
        assert set(scope.edges) == {(0, 0), (2, 2)}

    def test_k_hop_two(self):
        g = chain_graph()
        scope = extract_scope(g, 0, [2], "k_hop", hops=2)
        assert set(scope.edges) == {(0, 0), (1, 0), (2, 1), (2, 2)}

    def test_indirect_empty_when_target_too_far(self):
        g = chain_graph()
        # The only u0 -> i2 path has length 5 > 2 * 2.
        scope = extract_scope(g, 0, [2], "indirect", hops=2)
        assert scope.edges == ()

    def test_indirect_covers_path_when_reachable(self):
        g = chain_graph()
        # 2 * 3 = 6 >= 5: the whole path lies on an admissible walk.
        scope = extract_scope(g, 0, [2], "indirect", hops=3)
        assert set(scope.edges) == {(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)}

    def test_indirect_close_target(self):
        g = chain_graph()
        # u0 -> i0 -> u1 -> i1 has length 3 <= 4.
        scope = extract_scope(g, 0, [1], "indirect", hops=2)
        assert set(scope.edges) == {(0, 0), (1, 0), (1, 1)}

    def test_disconnected_graph(self):
        g = InteractionMatrix(2, 2, ((0,), (1,)))
        scope = extract_scope(g, 0, [1], "indirect", hops=4)
        assert scope.edges == ()
        khop = extract_scope(g, 0, [1], "k_hop", hops=4)
        # Both components contribute their local neighborhoods.
        assert set(khop.edges) == {(0, 0), (1, 1)}


class TestProperties:
    def test_nesting_random_graphs(self):
        rng = np.random.default_rng(0)
        for trial in range(40):
            g = random_bipartite(
                rng, int(rng.integers(2, 8)), int(rng.integers(2, 8)), 0.4
            )
            if g.num_interactions == 0:
                continue
            user = int(rng.integers(g.num_users))
            target = int(rng.integers(g.num_items))
            hops = int(rng.integers(1, 4))
            full = extract_scope(g, user, [target], "full", hops).edge_set()
            khop = extract_scope(g, user, [target], "k_hop", hops).edge_set()
            indirect = extract_scope(g, user, [target], "indirect", hops).edge_set()
            useronly = extract_scope(g, user, [target], "user_only", hops).edge_set()
            assert useronly <= khop <= full
            assert indirect <= khop

    def test_k_hop_monotone_in_hops(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            g = random_bipartite(rng, 5, 5, 0.35)
            if g.num_interactions == 0:
                continue
            user = int(rng.integers(5))
            target = int(rng.integers(5))
            prev = set()
            for hops in range(1, 5):
                cur = extract_scope(g, user, [target], "k_hop", hops).edge_set()
                assert prev <= cur
                prev = cur

    def test_list_level_targets_union(self):
        g = chain_graph()
        merged = extract_scope(g, 0, [0, 2], "k_hop", hops=1).edge_set()
        t0 = extract_scope(g, 0, [0], "k_hop", hops=1).edge_set()
        t2 = extract_scope(g, 0, [2], "k_hop", hops=1).edge_set()
        assert merged == t0 | t2

    def test_validation(self):
        g = chain_graph()
        with pytest.raises(ConfigError):
            extract_scope(g, 0, [0], "global", 1)
        with pytest.raises(ConfigError):
            extract_scope(g, 0, [0], "k_hop", 0)
        with pytest.raises(ConfigError):
            extract_scope(g, 9, [0], "k_hop", 1)
        with pytest.raises(ConfigError):
            extract_scope(g, 0, [9], "k_hop", 1)

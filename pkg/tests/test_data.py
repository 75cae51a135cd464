"""Data pipeline tests: parsing, filtering, splitting, snapshots."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfxbench import data
from cfxbench.data import InteractionMatrix, RawRating
from cfxbench.errors import ConfigError, EmptyDatasetError, ParseError


def ratings(pairs, rating=None):
    return [RawRating(str(u), str(i), rating, None) for u, i in pairs]


class TestLoadInteractions:
    def test_tsv_with_rating_and_timestamp(self, tmp_path):
        p = tmp_path / "r.tsv"
        p.write_text("u1\ti1\t4.0\t100\nu2\ti2\t2.5\t200\n")
        recs = data.load_interactions(str(p), "tsv")
        assert recs[0] == RawRating("u1", "i1", 4.0, 100)
        assert recs[1].rating == 2.5

    def test_double_colon(self, tmp_path):
        p = tmp_path / "r.dat"
        p.write_text("1::10::5::978300760\n2::20::3::978302109\n")
        recs = data.load_interactions(str(p), "double_colon")
        assert recs[0].user == "1" and recs[0].item == "10"
        assert recs[1].rating == 3.0

    def test_csv_without_rating(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("a,b\nc,d\n")
        recs = data.load_interactions(str(p), "csv")
        assert recs[0].rating is None and recs[0].timestamp is None

    def test_malformed_line_carries_line_number(self, tmp_path):
        p = tmp_path / "r.tsv"
        p.write_text("u\ti\t4\nu2\tbroken\tnot_a_number\n")
        with pytest.raises(ParseError) as err:
            data.load_interactions(str(p), "tsv")
        assert err.value.line_number == 2

    def test_unknown_format(self, tmp_path):
        p = tmp_path / "r.x"
        p.write_text("a b\n")
        with pytest.raises(ConfigError):
            data.load_interactions(str(p), "pipe")

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "r.tsv"
        p.write_text("u\ti\n\nu2\ti2\n")
        assert len(data.load_interactions(str(p), "tsv")) == 2


class TestPreprocess:
    def test_strict_rating_filter(self):
        recs = [
            RawRating("u", "a", 3.0, None),  # not strictly above, dropped
            RawRating("u", "b", 3.5, None),
            RawRating("u", "c", None, None),  # unrated counts as positive
        ]
        m = data.preprocess_implicit(recs, positive_threshold=3.0, min_degree=1)
        assert m.num_users == 1 and m.num_items == 2

    def test_duplicates_collapse(self):
        recs = ratings([("u", "a"), ("u", "a"), ("u", "b")])
        m = data.preprocess_implicit(recs, min_degree=1)
        assert m.num_interactions == 2

    def test_min_degree_fixpoint_cascades(self):
        # Users u1-u3 share items a-c (a 3x3 core). u4 has items a, d, e;
        # d and e only reach degree 1 so u4 falls to degree 1 and drops,
        # which must not disturb the core.
        pairs = [(u, i) for u in ("u1", "u2", "u3") for i in ("a", "b", "c")]
        pairs += [("u4", "a"), ("u4", "d"), ("u4", "e")]
        m = data.preprocess_implicit(ratings(pairs), min_degree=3)
        assert m.num_users == 3 and m.num_items == 3
        assert m.num_interactions == 9
        degs_u, degs_i = data.degree_vectors(m)
        assert (degs_u >= 3).all() and (degs_i >= 3).all()

    def test_fixpoint_property_random(self):
        rng = np.random.default_rng(11)
        for trial in range(30):
            n_u, n_i = int(rng.integers(4, 30)), int(rng.integers(4, 30))
            density = rng.uniform(0.05, 0.5)
            pairs = [
                (f"u{u}", f"i{i}")
                for u in range(n_u)
                for i in range(n_i)
                if rng.random() < density
            ]
            if not pairs:
                continue
            try:
                m = data.preprocess_implicit(ratings(pairs), min_degree=3)
            except EmptyDatasetError:
                continue
            degs_u, degs_i = data.degree_vectors(m)
            assert (degs_u >= 3).all() and (degs_i >= 3).all()
            # Running the filter again over the surviving graph is a no-op.
            again = data.preprocess_implicit(
                ratings(
                    (f"u{u}", f"i{i}")
                    for u in range(m.num_users)
                    for i in m.user_items[u]
                ),
                min_degree=3,
            )
            assert again.num_interactions == m.num_interactions

    def test_dense_remap_first_appearance(self):
        pairs = [("z", "q"), ("a", "q"), ("z", "r"), ("a", "r"), ("z", "s"), ("a", "s")]
        m = data.preprocess_implicit(ratings(pairs), min_degree=2)
        # "z" appears before "a", "q" before "r" before "s".
        assert m.num_users == 2 and m.num_items == 3
        assert m.user_items[0] == (0, 1, 2)  # z kept all three in appearance order

    def test_empty_after_filter(self):
        with pytest.raises(EmptyDatasetError):
            data.preprocess_implicit(ratings([("u", "a")]), min_degree=3)
        with pytest.raises(EmptyDatasetError):
            data.preprocess_implicit(
                [RawRating("u", "a", 1.0, None)], positive_threshold=3.0
            )


class TestSplit:
    def _matrix(self, rows):
        return InteractionMatrix(
            num_users=len(rows),
            num_items=1 + max(i for r in rows for i in r),
            user_items=tuple(tuple(sorted(r)) for r in rows),
        )

    def test_floor_sizes_ten_items(self):
        m = self._matrix([tuple(range(10))])
        split = data.split_holdout(m, seed=0)
        assert len(split.val[0]) == 1 and len(split.test[0]) == 1
        assert len(split.train.user_items[0]) == 8

    def test_tiny_histories_keep_train_nonempty(self):
        m = self._matrix([(0, 1, 2), (3,), (4, 5)])
        split = data.split_holdout(m, seed=1)
        for u in range(3):
            assert len(split.train.user_items[u]) >= 1
            assert split.val[u] == () and split.test[u] == ()

    def test_partition_exact(self):
        rng = np.random.default_rng(3)
        rows = [
            tuple(sorted(rng.choice(50, size=rng.integers(1, 20), replace=False)))
            for _ in range(20)
        ]
        m = self._matrix(rows)
        split = data.split_holdout(m, seed=9)
        for u in range(20):
            parts = (
                set(split.train.user_items[u]) | set(split.val[u]) | set(split.test[u])
            )
            assert parts == set(rows[u])
            assert not set(split.train.user_items[u]) & set(split.val[u])
            assert not set(split.train.user_items[u]) & set(split.test[u])
            assert not set(split.val[u]) & set(split.test[u])

    def test_deterministic_per_seed(self):
        m = self._matrix([tuple(range(12)), tuple(range(3, 20))])
        a = data.split_holdout(m, seed=5)
        b = data.split_holdout(m, seed=5)
        c = data.split_holdout(m, seed=6)
        assert a.train.user_items == b.train.user_items
        assert a.val == b.val and a.test == b.test
        assert (a.val, a.test) != (c.val, c.test)

    def test_bad_ratios(self):
        m = self._matrix([(0, 1)])
        with pytest.raises(ConfigError):
            data.split_holdout(m, ratios=(0.5, 0.2, 0.2))


class TestInteractionMatrix:
    def test_edges_lexicographic_and_ids(self):
        m = InteractionMatrix(2, 3, ((0, 2), (1,)))
        assert m.edges().tolist() == [[0, 0], [0, 2], [1, 1]]
        assert m.edge_id(0, 2) == 1
        assert m.has_edge(1, 1) and not m.has_edge(1, 0)
        with pytest.raises(KeyError):
            m.edge_id(1, 2)

    def test_item_users_inverse(self):
        m = InteractionMatrix(3, 2, ((0,), (0, 1), (1,)))
        assert m.users_of(0) == (0, 1)
        assert m.users_of(1) == (1, 2)

    def test_rejects_unsorted_rows(self):
        with pytest.raises(ValueError):
            InteractionMatrix(1, 3, ((2, 0),))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            InteractionMatrix(1, 2, ((0, 5),))


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        m = InteractionMatrix(3, 4, ((0, 2), (1, 3), (0,)))
        path = tmp_path / "snap.txt"
        data.save_snapshot(m, str(path))
        text = path.read_text()
        assert text.splitlines()[0] == "users=3 items=4 interactions=5"
        loaded = data.load_snapshot(str(path))
        assert loaded == m

    def test_header_mismatch_detected(self, tmp_path):
        path = tmp_path / "snap.txt"
        path.write_text("users=1 items=1 interactions=2\n0\t0\n")
        with pytest.raises(ParseError):
            data.load_snapshot(str(path))

    def test_bad_pair_line(self, tmp_path):
        path = tmp_path / "snap.txt"
        path.write_text("users=1 items=1 interactions=1\n0 0\n")
        with pytest.raises(ParseError) as err:
            data.load_snapshot(str(path))
        assert err.value.line_number == 2

    @given(
        st.lists(
            st.tuples(st.integers(0, 8), st.integers(0, 8)),
            min_size=1,
            max_size=40,
            unique=True,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, tmp_path_factory, pairs):
        rows = [[] for _ in range(9)]
        for u, i in pairs:
            rows[u].append(i)
        m = InteractionMatrix(9, 9, tuple(tuple(sorted(set(r))) for r in rows))
        path = tmp_path_factory.mktemp("snap") / "s.txt"
        data.save_snapshot(m, str(path))
        assert data.load_snapshot(str(path)) == m

"""Dataset loading, implicit-feedback preprocessing, splitting and snapshots.

The canonical in-memory form is :class:`InteractionMatrix`, an immutable
user/item incidence structure that doubles as the bipartite interaction
graph (edges are (user, item) pairs in lexicographic order).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, EmptyDatasetError, ParseError

FORMAT_SEPARATORS = {"tsv": "\t", "csv": ",", "double_colon": "::"}


class RawRating(NamedTuple):
    user: str
    item: str
    rating: Optional[float]
    timestamp: Optional[int]


@dataclass(frozen=True)
class InteractionMatrix:
    """Immutable binary interaction matrix over dense user/item ids."""

    num_users: int
    num_items: int
    user_items: tuple  # tuple of per-user ascending item-id tuples

    _item_users: tuple = field(init=False, repr=False, compare=False)
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _edge_ids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.user_items) != self.num_users:
            raise ValueError("user_items length does not match num_users")
        buckets = [[] for _ in range(self.num_items)]
        edges = []
        for u, items in enumerate(self.user_items):
            prev = -1
            for i in items:
                if not 0 <= i < self.num_items:
                    raise ValueError(f"item id {i} out of range")
                if i <= prev:
                    raise ValueError("user_items rows must be strictly ascending")
                prev = i
                buckets[i].append(u)
                edges.append((u, i))
        edge_arr = np.asarray(edges, dtype=np.int64).reshape(len(edges), 2)
        object.__setattr__(self, "_item_users", tuple(tuple(b) for b in buckets))
        object.__setattr__(self, "_edges", edge_arr)
        object.__setattr__(
            self, "_edge_ids", {(u, i): e for e, (u, i) in enumerate(edges)}
        )

    @property
    def num_interactions(self) -> int:
        return len(self._edges)

    @property
    def item_users(self) -> tuple:
        return self._item_users

    def items_of(self, user: int) -> tuple:
        return self.user_items[user]

    def users_of(self, item: int) -> tuple:
        return self._item_users[item]

    def edges(self) -> np.ndarray:
        """All (user, item) edges, shape (E, 2), lexicographic order."""
        return self._edges

    def edge_id(self, user: int, item: int) -> int:
        try:
            return self._edge_ids[(user, item)]
        except KeyError:
            raise KeyError(f"no interaction ({user}, {item})") from None

    def has_edge(self, user: int, item: int) -> bool:
        return (user, item) in self._edge_ids

    def degree_of_user(self, user: int) -> int:
        return len(self.user_items[user])

    def degree_of_item(self, item: int) -> int:
        return len(self._item_users[item])


@dataclass(frozen=True)
class DatasetSplit:
    """Per-user holdout split; val/test are per-user ascending item tuples."""

    train: InteractionMatrix
    val: tuple
    test: tuple
    seed: int


def load_interactions(path: str, fmt: str = "tsv") -> list:
    """Parse a delimited rating file into RawRating records.

    Columns are user, item, optional rating, optional timestamp. Malformed
    lines raise :class:`ParseError` carrying the 1-based line number.
    """
    if fmt not in FORMAT_SEPARATORS:
        raise ConfigError(
            f"unknown format {fmt!r}, expected one of {sorted(FORMAT_SEPARATORS)}"
        )
    sep = FORMAT_SEPARATORS[fmt]
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split(sep)
            if len(parts) < 2 or len(parts) > 4:
                raise ParseError(
                    f"expected 2-4 fields separated by {sep!r}, got {len(parts)}",
                    lineno,
                )
            user, item = parts[0].strip(), parts[1].strip()
            if not user or not item:
                raise ParseError("empty user or item field", lineno)
            rating = None
            timestamp = None
            if len(parts) >= 3 and parts[2].strip():
                try:
                    rating = float(parts[2])
                except ValueError:
                    raise ParseError(f"bad rating value {parts[2]!r}", lineno) from None
            if len(parts) == 4 and parts[3].strip():
                try:
                    timestamp = int(float(parts[3]))
                except ValueError:
                    raise ParseError(
                        f"bad timestamp value {parts[3]!r}", lineno
                    ) from None
            records.append(RawRating(user, item, rating, timestamp))
    return records


def preprocess_implicit(
    ratings: Sequence[RawRating],
    positive_threshold: float = 3.0,
    min_degree: int = 3,
) -> InteractionMatrix:
    """Binarize ratings and run the iterative min-degree filter to a fixpoint.

    A record is positive when its rating is strictly above ``positive_threshold``
    or when it has no rating at all. Users and items with fewer than
    ``min_degree`` surviving interactions are dropped repeatedly until the
    degrees stabilize. Surviving ids are remapped densely in order of first
    appearance in the input.
    """
    pairs = []
    seen = set()
    for rec in ratings:
        if rec.rating is not None and rec.rating <= positive_threshold:
            continue
        key = (rec.user, rec.item)
        if key in seen:
            continue
        seen.add(key)
        pairs.append(key)
    if not pairs:
        raise EmptyDatasetError("no positive interactions above threshold")

    while True:
        user_deg = {}
        item_deg = {}
        for u, i in pairs:
            user_deg[u] = user_deg.get(u, 0) + 1
            item_deg[i] = item_deg.get(i, 0) + 1
        kept = [
            (u, i)
            for u, i in pairs
            if user_deg[u] >= min_degree and item_deg[i] >= min_degree
        ]
        if len(kept) == len(pairs):
            break
        pairs = kept
        if not pairs:
            raise EmptyDatasetError(
                f"min-degree filter (>= {min_degree}) removed every interaction"
            )

    user_map = {}
    item_map = {}
    for u, i in pairs:
        if u not in user_map:
            user_map[u] = len(user_map)
        if i not in item_map:
            item_map[i] = len(item_map)
    rows = [[] for _ in range(len(user_map))]
    for u, i in pairs:
        rows[user_map[u]].append(item_map[i])
    return InteractionMatrix(
        num_users=len(user_map),
        num_items=len(item_map),
        user_items=tuple(tuple(sorted(r)) for r in rows),
    )


def split_holdout(
    matrix: InteractionMatrix,
    ratios: tuple = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Per-user train/val/test split with floor-sized holdouts.

    Each user contributes floor(r_val * n) items to validation and
    floor(r_test * n) to test; the remainder stays in train, which is
    therefore never empty for users with at least one interaction.
    """
    r_train, r_val, r_test = ratios
    if not np.isclose(r_train + r_val + r_test, 1.0):
        raise ConfigError(f"split ratios must sum to 1, got {ratios}")
    if r_val < 0 or r_test < 0 or r_train <= 0:
        raise ConfigError(f"split ratios out of range: {ratios}")
    rng = np.random.default_rng(seed)
    train_rows = []
    val_rows = []
    test_rows = []
    for user in range(matrix.num_users):
        items = list(matrix.user_items[user])
        n = len(items)
        n_val = int(np.floor(r_val * n))
        n_test = int(np.floor(r_test * n))
        perm = rng.permutation(n)
        shuffled = [items[j] for j in perm]
        val = shuffled[:n_val]
        test = shuffled[n_val : n_val + n_test]
        train = shuffled[n_val + n_test :]
        if not train and n > 0:
            raise ConfigError("split ratios leave a user without train items")
        train_rows.append(tuple(sorted(train)))
        val_rows.append(tuple(sorted(val)))
        test_rows.append(tuple(sorted(test)))
    train_matrix = InteractionMatrix(
        num_users=matrix.num_users,
        num_items=matrix.num_items,
        user_items=tuple(train_rows),
    )
    return DatasetSplit(
        train=train_matrix, val=tuple(val_rows), test=tuple(test_rows), seed=seed
    )


def degree_vectors(matrix: InteractionMatrix) -> tuple:
    """User and item degree arrays of the interaction graph."""
    user_deg = np.array([len(r) for r in matrix.user_items], dtype=np.int64)
    item_deg = np.array([len(r) for r in matrix.item_users], dtype=np.int64)
    return user_deg, item_deg


def save_snapshot(matrix: InteractionMatrix, path: str) -> None:
    """Write the canonical text snapshot: a stats header plus sorted pairs."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"users={matrix.num_users} items={matrix.num_items} "
            f"interactions={matrix.num_interactions}\n"
        )
        for u, i in matrix.edges():
            fh.write(f"{u}\t{i}\n")


def load_snapshot(path: str) -> InteractionMatrix:
    """Read a snapshot written by :func:`save_snapshot`, validating the header."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = {}
        for token in header.split():
            if "=" not in token:
                raise ParseError(f"bad header token {token!r}", 1)
            key, value = token.split("=", 1)
            try:
                fields[key] = int(value)
            except ValueError:
                raise ParseError(f"bad header value {token!r}", 1) from None
        for key in ("users", "items", "interactions"):
            if key not in fields:
                raise ParseError(f"header missing {key!r}", 1)
        rows = [[] for _ in range(fields["users"])]
        count = 0
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected 'user<TAB>item'", lineno)
            try:
                u, i = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"bad pair {line!r}", lineno) from None
            if not 0 <= u < fields["users"]:
                raise ParseError(f"user id {u} out of range", lineno)
            rows[u].append(i)
            count += 1
    if count != fields["interactions"]:
        raise ParseError(
            f"header claims {fields['interactions']} interactions, found {count}", 1
        )
    return InteractionMatrix(
        num_users=fields["users"],
        num_items=fields["items"],
        user_items=tuple(tuple(sorted(r)) for r in rows),
    )

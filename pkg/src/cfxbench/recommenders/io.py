"""Text checkpoints for trained models.

Layout: `key=value` header lines, then named blocks of row-major float
rows. Floats are serialized with float.hex() so reloading is bit-exact.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

from ..data import InteractionMatrix
from ..errors import ParseError
from . import Recommender
from .lightgcn import LightGCNModel
from .mf import MFModel


def _write_block(fh, name: str, array: np.ndarray) -> None:
    array = np.atleast_2d(np.asarray(array, dtype=np.float64))
    fh.write(f"block={name} rows={array.shape[0]} cols={array.shape[1]}\n")
    for row in array:
        fh.write(" ".join(v.hex() for v in row.tolist()) + "\n")


def _read_block(fh, lineno: int) -> tuple:
    header = fh.readline()
    if not header:
        raise ParseError("unexpected end of checkpoint", lineno)
    fields = dict(tok.split("=", 1) for tok in header.split())
    name = fields["block"]
    rows, cols = int(fields["rows"]), int(fields["cols"])
    data = np.empty((rows, cols), dtype=np.float64)
    for r in range(rows):
        line = fh.readline()
        if not line:
            raise ParseError(f"block {name!r} truncated", lineno + 1 + r)
        values = line.split()
        if len(values) != cols:
            raise ParseError(
                f"block {name!r} row has {len(values)} values, expected {cols}",
                lineno + 1 + r,
            )
        data[r] = [float.fromhex(v) for v in values]
    return name, data, lineno + 1 + rows


def save_checkpoint(model: Recommender, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(model, MFModel):
            fh.write(f"kind=mf dim={model.dim} num_items={model.num_items}\n")
            _write_block(fh, "item_embeddings", model.item_embeddings)
            _write_block(fh, "item_bias", model.item_bias)
        elif isinstance(model, LightGCNModel):
            fh.write(
                f"kind=lightgcn dim={model.dim} num_users={model.num_users} "
                f"num_items={model.num_items} num_layers={model.num_layers}\n"
            )
            _write_block(fh, "user_embeddings", model.user_embeddings)
            _write_block(fh, "item_embeddings", model.item_embeddings)
        else:
            raise ValueError(f"cannot checkpoint model kind {model.kind!r}")


def load_checkpoint(path: str, graph: Optional[InteractionMatrix] = None) -> Recommender:
    """Rebuild a model from its checkpoint; graph models need their graph back."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = {}
        for token in header.split():
            if "=" not in token:
                raise ParseError(f"bad header token {token!r}", 1)
            key, value = token.split("=", 1)
            fields[key] = value
        kind = fields.get("kind")
        blocks = {}
        lineno = 1
        while True:
            pos = fh.tell()
            if not fh.readline():
                break
            fh.seek(pos)
            name, data, lineno = _read_block(fh, lineno + 1)
            blocks[name] = data
    if kind == "mf":
        return MFModel(
            blocks["item_embeddings"], blocks["item_bias"].ravel(), graph=graph
        )
    if kind == "lightgcn":
        if graph is None:
            raise ValueError("loading a lightgcn checkpoint requires the graph")
        return LightGCNModel(
            blocks["user_embeddings"],
            blocks["item_embeddings"],
            graph,
            num_layers=int(fields["num_layers"]),
        )
    raise ParseError(f"unknown checkpoint kind {kind!r}", 1)

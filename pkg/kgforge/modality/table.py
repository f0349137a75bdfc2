# The MIT License (MIT)
# Copyright © 2024 KGForge Contributors

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the “Software”), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED “AS IS”, WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

import struct
import torch
import numpy as np
import bittensor as bt
from enum import Enum
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional
from kgforge.errors import ContractViolation, LoadError
from kgforge.numerics.tensor import DTYPE

MAGIC = b"KGE1"
DEFAULT_DIM = 768


class Modality(Enum):
    sequence = "sequence"
    description = "description"
    structural = "structural"


# Fixed slot order inside a ModalityView.
MODALITY_ORDER = (Modality.sequence.value, Modality.description.value, Modality.structural.value)


def gcl_tag(node_type: str) -> str:
    return f"gcl:{node_type}"


@dataclass
class EmbeddingTable:
    """Per-modality map node id -> vector of length ``dim``.

    ``modality`` is a Modality value for attribute tables, ``gcl:<node type>`` for
    contrastively refined tables, or ``kge`` for exported link-prediction latents.
    """

    modality: str
    dim: int
    rows: Dict[int, torch.Tensor] = field(default_factory=dict)
    skipped: int = 0

    def __post_init__(self):
        if self.dim <= 0:
            raise ContractViolation(f"dimension must be positive, got {self.dim}")
        for node_id, vector in self.rows.items():
            if vector.shape != (self.dim,):
                raise ContractViolation(
                    f"node {node_id}: vector of shape {tuple(vector.shape)}, expected ({self.dim},)"
                )
            if not torch.isfinite(vector).all():
                raise ContractViolation(f"node {node_id}: non-finite values")

    def __len__(self) -> int:
        return len(self.rows)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.rows

    def get(self, node_id: int) -> Optional[torch.Tensor]:
        return self.rows.get(node_id)

    def attach(self, num_nodes: int) -> "EmbeddingTable":
        """Drops rows whose node id is outside ``0..num_nodes-1``, counting them."""
        unknown = [node_id for node_id in self.rows if not 0 <= node_id < num_nodes]
        for node_id in unknown:
            del self.rows[node_id]
        if unknown:
            self.skipped += len(unknown)
            bt.logging.warning(
                f"{self.modality}: skipped {len(unknown)} row(s) with unknown node ids (e.g. {unknown[:5]})"
            )
        return self

    def matrix(self, node_ids: Iterable[int]) -> torch.Tensor:
        return torch.stack([self.rows[node_id] for node_id in node_ids])


def _load_tsv(path: str, lines) -> EmbeddingTable:
    header = lines[0].split("\t")
    try:
        if header[0] != "node_id" or not header[1].startswith("dim=") or not header[2].startswith("modality="):
            raise ValueError
        dim = int(header[1][len("dim=") :])
        modality = header[2][len("modality=") :]
    except (ValueError, IndexError):
        raise LoadError(
            "expected header node_id<TAB>dim=<n><TAB>modality=<name>", path=path, line=1
        )
    rows: Dict[int, torch.Tensor] = {}
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise LoadError("expected node_id<TAB>v0,v1,...", path=path, line=line_number)
        try:
            node_id = int(parts[0])
            values = [float(v) for v in parts[1].split(",")]
        except ValueError:
            raise LoadError(f"malformed row for {parts[0]!r}", path=path, line=line_number)
        if len(values) != dim:
            raise LoadError(
                f"node {node_id}: dimension {len(values)} does not match dim={dim}",
                path=path,
                line=line_number,
            )
        vector = torch.tensor(values, dtype=DTYPE)
        if not torch.isfinite(vector).all():
            raise LoadError(f"node {node_id}: non-finite values", path=path, line=line_number)
        rows[node_id] = vector
    return EmbeddingTable(modality=modality, dim=dim, rows=rows)


def _load_binary(path: str, blob: bytes) -> EmbeddingTable:
    try:
        offset = len(MAGIC)
        (tag_length,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        modality = blob[offset : offset + tag_length].decode("utf-8")
        offset += tag_length
        dim, count = struct.unpack_from("<IQ", blob, offset)
        offset += 12
        record = np.dtype([("node_id", "<u8"), ("vector", "<f8", (dim,))])
        records = np.frombuffer(blob, dtype=record, count=count, offset=offset)
    except (struct.error, ValueError) as e:
        raise LoadError(f"truncated or corrupt embedding file: {e}", path=path)
    rows: Dict[int, torch.Tensor] = {}
    for node_id, vector in zip(records["node_id"].tolist(), records["vector"]):
        tensor = torch.from_numpy(vector.copy())
        if not torch.isfinite(tensor).all():
            raise LoadError(f"node {node_id}: non-finite values", path=path)
        rows[int(node_id)] = tensor
    return EmbeddingTable(modality=modality, dim=int(dim), rows=rows)


def load_table(
    path: str,
    modality: Optional[str] = None,
    num_nodes: Optional[int] = None,
) -> EmbeddingTable:
    """Loads a TSV or KGE1 embedding table (format detected from the magic bytes).

    When ``num_nodes`` is given, rows for unknown node ids are skipped with a warning.
    """
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except FileNotFoundError:
        raise LoadError("embedding file not found", path=path)
    if blob[: len(MAGIC)] == MAGIC:
        table = _load_binary(path, blob)
    else:
        lines = blob.decode("utf-8").splitlines()
        if not lines:
            raise LoadError("empty embedding file", path=path)
        table = _load_tsv(path, lines)
    if modality is not None and table.modality != modality:
        raise LoadError(f"file holds modality {table.modality!r}, expected {modality!r}", path=path)
    if num_nodes is not None:
        table.attach(num_nodes)
    bt.logging.debug(f"Loaded {table.modality} table: {len(table)} rows, dim {table.dim}")
    return table


def save_table(table: EmbeddingTable, path: str, binary: bool = True) -> str:
    node_ids = sorted(table.rows)
    if binary:
        tag = table.modality.encode("utf-8")
        record = np.dtype([("node_id", "<u8"), ("vector", "<f8", (table.dim,))])
        records = np.zeros(len(node_ids), dtype=record)
        for index, node_id in enumerate(node_ids):
            records[index]["node_id"] = node_id
            records[index]["vector"] = table.rows[node_id].detach().numpy()
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<H", len(tag)))
            f.write(tag)
            f.write(struct.pack("<IQ", table.dim, len(node_ids)))
            f.write(records.tobytes())
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"node_id\tdim={table.dim}\tmodality={table.modality}\n")
            for node_id in node_ids:
                values = ",".join(repr(v) for v in table.rows[node_id].detach().tolist())
                f.write(f"{node_id}\t{values}\n")
    bt.logging.success(prefix=f"Saved {table.modality} table", sufix=f"<blue>{path}</blue>")
    return path

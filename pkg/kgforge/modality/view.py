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

import math
import torch
import hashlib
import bittensor as bt
from enum import Enum
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
from kgforge.errors import ContractViolation
from kgforge.numerics.ops import make_generator
from kgforge.numerics.tensor import DTYPE
from kgforge.modality.table import MODALITY_ORDER, EmbeddingTable


class Provenance(Enum):
    loaded = "loaded"
    random_init = "random-init"


@dataclass
class ModalityView:
    node_id: int
    vectors: List[Tuple[str, torch.Tensor, Provenance]]

    @property
    def M(self) -> int:
        return len(self.vectors)

    @property
    def modalities(self) -> List[str]:
        return [modality for modality, _, _ in self.vectors]

    def stack(self) -> torch.Tensor:
        """(M, D) matrix of the vectors in slot order."""
        return torch.stack([vector for _, vector, _ in self.vectors])


def fill_key(seed: int, node_id: int, modality: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{node_id}:{modality}".encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def keyed_fill(seed: int, node_id: int, modality: str, dim: int) -> torch.Tensor:
    """N(0, 1/sqrt(dim)) vector that depends only on (seed, node id, modality)."""
    generator = make_generator(fill_key(seed, node_id, modality))
    return torch.randn(dim, generator=generator, dtype=DTYPE) / math.sqrt(dim)


def enabled_modalities(tables: Mapping[str, EmbeddingTable], modalities: Optional[Sequence[str]] = None) -> List[str]:
    names = list(modalities) if modalities is not None else list(tables)
    if not names:
        raise ContractViolation("at least one modality must be enabled")
    # Known modalities keep their fixed slot order; anything else follows alphabetically.
    known = [m for m in MODALITY_ORDER if m in names]
    return known + sorted(m for m in names if m not in MODALITY_ORDER)


def _common_dim(tables: Mapping[str, EmbeddingTable], dim: Optional[int]) -> int:
    dims = {table.dim for table in tables.values()}
    if dim is not None:
        dims.add(dim)
    if len(dims) != 1:
        raise ContractViolation(f"modality tables disagree on dimension: {sorted(dims)}")
    return dims.pop()


def get_modalities(
    node_id: int,
    tables: Mapping[str, EmbeddingTable],
    seed: int,
    modalities: Optional[Sequence[str]] = None,
    dim: Optional[int] = None,
) -> ModalityView:
    """One vector per enabled modality; rows missing from a table get the keyed fill."""
    names = enabled_modalities(tables, modalities)
    dim = _common_dim(tables, dim)
    vectors = []
    for modality in names:
        table = tables.get(modality)
        vector = table.get(node_id) if table is not None else None
        if vector is not None:
            vectors.append((modality, vector, Provenance.loaded))
        else:
            vectors.append((modality, keyed_fill(seed, node_id, modality, dim), Provenance.random_init))
    return ModalityView(node_id=node_id, vectors=vectors)


def modality_stack(
    num_nodes: int,
    tables: Mapping[str, EmbeddingTable],
    seed: int,
    modalities: Optional[Sequence[str]] = None,
    dim: Optional[int] = None,
) -> Tuple[torch.Tensor, Dict[str, Dict[str, int]]]:
    """Batched get_modalities over nodes 0..num_nodes-1.

    Returns the (n, M, D) stack and per-modality provenance counts.
    """
    names = enabled_modalities(tables, modalities)
    dim = _common_dim(tables, dim)
    stack = torch.empty((num_nodes, len(names), dim), dtype=DTYPE)
    counts: Dict[str, Dict[str, int]] = {
        modality: {p.value: 0 for p in Provenance} for modality in names
    }
    for node_id in range(num_nodes):
        view = get_modalities(node_id, tables, seed, names, dim)
        for slot, (modality, vector, provenance) in enumerate(view.vectors):
            stack[node_id, slot] = vector
            counts[modality][provenance.value] += 1

    for modality, count in counts.items():
        filled = count[Provenance.random_init.value]
        if filled:
            bt.logging.warning(f"{modality}: {filled}/{num_nodes} node(s) use random-init vectors")
    bt.logging.debug(f"modality_stack(): shape {tuple(stack.shape)}, provenance {counts}")
    return stack, counts

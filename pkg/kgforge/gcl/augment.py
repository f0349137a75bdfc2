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

import torch
import numpy as np
from dataclasses import dataclass, field
from typing import List
from kgforge.errors import ConfigurationError, SamplingError
from kgforge.graph.store import KnowledgeGraph

MAX_RETRIES = 100


@dataclass
class GraphView:
    """Feature matrix and edge list (2 x E, head row then tail row) of one augmented view."""

    features: torch.Tensor
    edges: torch.LongTensor
    masked: List[int] = field(default_factory=list)
    p_mask: float = 0.0
    p_drop: float = 0.0
    seed: int = 0

    @property
    def num_nodes(self) -> int:
        return self.features.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[1]


def edge_index(graph: KnowledgeGraph) -> torch.LongTensor:
    """Homogeneous edge list of ``graph`` (relations ignored)."""
    triples = graph.triple_tensor
    return torch.stack([triples[:, 0], triples[:, 2]]) if len(triples) else torch.zeros((2, 0), dtype=torch.long)


def plain_view(graph: KnowledgeGraph, features: torch.Tensor) -> GraphView:
    return GraphView(features=features, edges=edge_index(graph))


def augment(
    graph: KnowledgeGraph,
    features: torch.Tensor,
    p_mask: float,
    p_drop: float,
    seed: int,
) -> GraphView:
    """Zeroes each node's feature row with probability ``p_mask`` and removes each edge
    with probability ``p_drop``, independently and deterministically per seed."""
    for key, p in (("gcl.p_mask", p_mask), ("gcl.p_drop", p_drop)):
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"probability must lie in [0, 1], got {p}", key=key)
    rng = np.random.default_rng(seed)
    edges = edge_index(graph)
    masked = np.flatnonzero(rng.random(features.shape[0]) < p_mask)
    kept = torch.from_numpy(rng.random(edges.shape[1]) >= p_drop)

    keep_rows = torch.ones(features.shape[0], 1, dtype=features.dtype)
    keep_rows[torch.from_numpy(masked)] = 0.0
    return GraphView(
        features=features * keep_rows,
        edges=edges[:, kept],
        masked=masked.tolist(),
        p_mask=p_mask,
        p_drop=p_drop,
        seed=seed,
    )


def sample_non_edges(edges: torch.LongTensor, num_nodes: int, count: int, rng: np.random.Generator) -> torch.LongTensor:
    """``count`` uniform node pairs (i != j) joined by no edge in either direction."""
    present = set(zip(edges[0].tolist(), edges[1].tolist()))
    present |= {(j, i) for i, j in present}
    pairs = []
    for _ in range(count):
        for _attempt in range(MAX_RETRIES):
            i, j = (int(v) for v in rng.integers(num_nodes, size=2))
            if i != j and (i, j) not in present:
                pairs.append((i, j))
                break
        else:
            raise SamplingError(f"no non-edge found after {MAX_RETRIES} retries on {num_nodes} nodes")
    if not pairs:
        return torch.zeros((2, 0), dtype=torch.long)
    return torch.tensor(pairs, dtype=torch.long).t()

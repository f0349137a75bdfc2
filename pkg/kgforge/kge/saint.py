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
import bittensor as bt
from dataclasses import dataclass
from typing import Iterable, List
from kgforge.errors import ContractViolation, SamplingError
from kgforge.graph.store import KnowledgeGraph


@dataclass
class SubgraphBatch:
    """Random-walk induced subgraph. ``nodes`` are sorted parent ids; ``triples`` (E x 3)
    use parent ids too."""

    nodes: torch.LongTensor
    triples: torch.LongTensor
    roots: List[int]
    walk_length: int
    seed: int

    def local_index(self) -> torch.LongTensor:
        """Parent id -> position in ``nodes`` (-1 outside the batch)."""
        size = int(self.nodes.max()) + 1 if len(self.nodes) else 0
        index = torch.full((size,), -1, dtype=torch.long)
        index[self.nodes] = torch.arange(len(self.nodes))
        return index

    def local_triples(self) -> torch.LongTensor:
        if not len(self.triples):
            return self.triples
        index = self.local_index()
        return torch.stack(
            [index[self.triples[:, 0]], self.triples[:, 1], index[self.triples[:, 2]]], dim=1
        )


def induced_triples(graph: KnowledgeGraph, nodes: Iterable[int]) -> torch.LongTensor:
    """Every triple of ``graph`` whose head and tail both lie in ``nodes``."""
    member = torch.zeros(graph.num_nodes, dtype=torch.bool)
    member[torch.as_tensor(list(nodes), dtype=torch.long)] = True
    triples = graph.triple_tensor
    if not len(triples):
        return triples
    return triples[member[triples[:, 0]] & member[triples[:, 2]]]


def graphsaint_sample(graph: KnowledgeGraph, num_roots: int, walk_length: int, seed: int) -> SubgraphBatch:
    """Uniform roots, one uniform out-edge walk per root (restarting at the root on a dead
    end), node set = visited nodes, triples = induced subgraph."""
    if num_roots < 1 or walk_length < 1:
        raise ContractViolation(f"num_roots and walk_length must be >= 1, got {num_roots}, {walk_length}")
    if graph.num_triples == 0:
        message = "cannot sample subgraphs from a graph without edges"
        bt.logging.error(message)
        raise SamplingError(message)
    rng = np.random.default_rng(seed)
    pointer, tails = graph.out_csr
    roots = rng.choice(graph.num_nodes, size=min(num_roots, graph.num_nodes), replace=False).tolist()
    visited = set(roots)
    for root in roots:
        current = root
        for _ in range(walk_length):
            degree = pointer[current + 1] - pointer[current]
            if degree == 0:
                current = root
            else:
                current = int(tails[pointer[current] + rng.integers(degree)])
            visited.add(current)
    nodes = torch.tensor(sorted(visited), dtype=torch.long)
    return SubgraphBatch(
        nodes=nodes,
        triples=induced_triples(graph, visited),
        roots=[int(root) for root in roots],
        walk_length=walk_length,
        seed=seed,
    )

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
from typing import Tuple
from kgforge.errors import ContractViolation
from kgforge.gcl.augment import GraphView
from kgforge.numerics.ops import make_generator, scatter_add
from kgforge.numerics.tensor import DTYPE


def normalized_adjacency(edges: torch.LongTensor, num_nodes: int) -> Tuple[torch.LongTensor, torch.Tensor]:
    """Sparse D^-1/2 (A + I) D^-1/2 with A the symmetrized edge set.

    Returns (index (2 x nnz), values); row ``index[0]`` receives from ``index[1]``.
    """
    loops = torch.arange(num_nodes, dtype=torch.long)
    rows = torch.cat([edges[0], edges[1]])
    cols = torch.cat([edges[1], edges[0]])
    off_diagonal = rows != cols
    rows = torch.cat([rows[off_diagonal], loops])
    cols = torch.cat([cols[off_diagonal], loops])
    keys = torch.unique(rows * num_nodes + cols)
    rows, cols = keys // num_nodes, keys % num_nodes
    degree = torch.bincount(rows, minlength=num_nodes).to(DTYPE)
    scale = degree.rsqrt()
    return torch.stack([rows, cols]), scale[rows] * scale[cols]


def propagate(index: torch.LongTensor, values: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    return scatter_add(values.unsqueeze(1) * x[index[1]], index[0], x.shape[0])


class GcnEncoder(torch.nn.Module):
    """Two GCN layers: H = ReLU(A ReLU(A X W1 + b1) W2 + b2)."""

    def __init__(self, in_dim: int, hidden_dim: int = 128, out_dim: int = 128, seed: int = 0):
        super().__init__()
        generator = make_generator(seed)
        self.weight1 = torch.nn.Parameter(
            torch.randn(in_dim, hidden_dim, generator=generator, dtype=DTYPE) * math.sqrt(2.0 / in_dim)
        )
        self.bias1 = torch.nn.Parameter(torch.zeros(hidden_dim, dtype=DTYPE))
        self.weight2 = torch.nn.Parameter(
            torch.randn(hidden_dim, out_dim, generator=generator, dtype=DTYPE) * math.sqrt(2.0 / hidden_dim)
        )
        self.bias2 = torch.nn.Parameter(torch.zeros(out_dim, dtype=DTYPE))

    @property
    def out_dim(self) -> int:
        return self.weight2.shape[1]

    def forward(self, view: GraphView) -> torch.Tensor:
        if view.features.shape[1] != self.weight1.shape[0]:
            raise ContractViolation(
                f"encoder expects {self.weight1.shape[0]}-dim features, got {view.features.shape[1]}"
            )
        index, values = normalized_adjacency(view.edges, view.num_nodes)
        hidden = torch.relu(propagate(index, values, view.features @ self.weight1) + self.bias1)
        return torch.relu(propagate(index, values, hidden @ self.weight2) + self.bias2)


def gcn_encode(view: GraphView, params: GcnEncoder) -> torch.Tensor:
    return params(view)

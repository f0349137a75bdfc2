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
from typing import Optional
from kgforge.errors import ContractViolation
from kgforge.numerics.ops import dropout, make_generator, scatter_add
from kgforge.numerics.tensor import DTYPE


class RgcnLayer(torch.nn.Module):
    """h'_v = ReLU(W_0 h_v + b + sum_r sum_{u in N_r(v)} W_r h_u / |N_r(v)|), messages head -> tail."""

    def __init__(self, num_relations: int, in_dim: int, out_dim: int, generator: torch.Generator):
        super().__init__()
        scale = math.sqrt(2.0 / in_dim)
        self.rel = torch.nn.ParameterList(
            [
                torch.nn.Parameter(torch.randn(in_dim, out_dim, generator=generator, dtype=DTYPE) * scale)
                for _ in range(num_relations)
            ]
        )
        self.register_parameter(
            "self", torch.nn.Parameter(torch.randn(in_dim, out_dim, generator=generator, dtype=DTYPE) * scale)
        )
        self.bias = torch.nn.Parameter(torch.zeros(out_dim, dtype=DTYPE))

    def forward(self, h: torch.Tensor, triples: torch.LongTensor) -> torch.Tensor:
        n = h.shape[0]
        out = h @ getattr(self, "self") + self.bias
        if len(triples):
            heads, relations, tails = triples[:, 0], triples[:, 1], triples[:, 2]
            weights = torch.stack(list(self.rel))
            transformed = torch.einsum("ni,rio->rno", h, weights)
            slots = tails * len(self.rel) + relations
            counts = torch.bincount(slots, minlength=n * len(self.rel)).to(h.dtype)
            messages = transformed[relations, heads] / counts[slots].unsqueeze(1)
            out = out + scatter_add(messages, tails, n)
        return torch.relu(out)


class Rgcn(torch.nn.Module):
    """Two relational graph convolution layers, input -> hidden -> out, full per-relation weights."""

    def __init__(
        self,
        num_relations: int,
        in_dim: int,
        hidden_dim: int = 128,
        out_dim: int = 128,
        dropout: float = 0.2,
        seed: int = 0,
    ):
        super().__init__()
        generator = make_generator(seed)
        self.num_relations = num_relations
        self.dropout = dropout
        self.layer = torch.nn.ModuleList(
            [
                RgcnLayer(num_relations, in_dim, hidden_dim, generator),
                RgcnLayer(num_relations, hidden_dim, out_dim, generator),
            ]
        )

    @property
    def in_dim(self) -> int:
        return getattr(self.layer[0], "self").shape[0]

    def forward(
        self,
        x: torch.Tensor,
        triples: torch.LongTensor,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """``triples`` index rows of ``x`` (local ids)."""
        if len(triples) and int(triples[:, 1].max()) >= self.num_relations:
            raise ContractViolation(
                f"relation {int(triples[:, 1].max())} has no weights (model knows {self.num_relations})"
            )
        h = self.layer[0](x, triples)
        h = dropout(h, self.dropout, training, generator)
        return self.layer[1](h, triples)


def rgcn_forward(batch, features: torch.Tensor, params: Rgcn, training: bool = False, generator=None) -> torch.Tensor:
    """Latent X for ``batch.nodes`` given their feature rows (in ``batch.nodes`` order)."""
    return params(features, batch.local_triples(), training, generator)

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
from kgforge.errors import ContractViolation
from kgforge.numerics.ops import make_generator
from kgforge.numerics.tensor import DTYPE


def distmult_score(h: torch.Tensor, r: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    """sum_d h_d r_d t_d over the last axis."""
    if not h.shape[-1] == r.shape[-1] == t.shape[-1]:
        raise ContractViolation(
            f"DistMult factors disagree on dimension: {h.shape[-1]}, {r.shape[-1]}, {t.shape[-1]}"
        )
    return (h * r * t).sum(dim=-1)


class RelationEmbedding(torch.nn.Module):
    """Z: one diagonal DistMult factor per relation."""

    def __init__(self, num_relations: int, dim: int = 128, seed: int = 0):
        super().__init__()
        generator = make_generator(seed)
        self.Z = torch.nn.Parameter(torch.randn(num_relations, dim, generator=generator, dtype=DTYPE) / math.sqrt(dim))

    def forward(self, relations: torch.LongTensor) -> torch.Tensor:
        if len(relations) and (int(relations.max()) >= self.Z.shape[0] or int(relations.min()) < 0):
            raise ContractViolation(f"unknown relation id (model knows {self.Z.shape[0]} relations)")
        return self.Z[relations]

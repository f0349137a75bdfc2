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
from kgforge.fusion.base import BaseFusionModel, FusedEmbedding
from kgforge.fusion.config import FusionMethod
from kgforge.modality.view import ModalityView
from kgforge.numerics.ops import make_generator
from kgforge.numerics.tensor import DTYPE


class AttentionFusion(BaseFusionModel):
    """
    Projects every modality with its own W_i (D x d), scores the projections against a
    shared query q, and returns the softmax-weighted sum of the projections:

        h_i = W_i x_i,  alpha_i = softmax_i(q^T h_i),  h = sum_i alpha_i h_i
    """

    method = FusionMethod.attention

    def __init__(self, num_modalities: int, in_dim: int, out_dim: Optional[int] = None, seed: int = 0):
        out_dim = out_dim or in_dim
        super().__init__(num_modalities, in_dim, out_dim)
        generator = make_generator(seed)
        self.projections = torch.nn.ParameterList(
            [
                torch.nn.Parameter(
                    torch.randn(out_dim, in_dim, generator=generator, dtype=DTYPE) / math.sqrt(in_dim)
                )
                for _ in range(num_modalities)
            ]
        )
        self.query = torch.nn.Parameter(
            torch.randn(out_dim, generator=generator, dtype=DTYPE) / math.sqrt(out_dim)
        )

    def project(self, stack: torch.Tensor) -> torch.Tensor:
        """(n, M, d) -> (n, M, D)."""
        weight = torch.stack(list(self.projections))
        return torch.einsum("nmd,mkd->nmk", stack, weight)

    def forward(
        self,
        stack: torch.Tensor,
        node_ids: Optional[torch.LongTensor] = None,
        type_ids: Optional[torch.LongTensor] = None,
    ):
        self.check_stack(stack)
        projected = self.project(stack)
        weights = torch.softmax(projected @ self.query, dim=1)
        weighted = (weights.unsqueeze(-1) * projected).sum(dim=1)
        return weighted, weights, projected.mean(dim=1)


def fuse_attention(view: ModalityView, params: AttentionFusion) -> FusedEmbedding:
    return params.fuse_one(view.stack(), node_id=view.node_id)

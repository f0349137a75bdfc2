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
from kgforge.fusion.base import BaseFusionModel, FusedEmbedding
from kgforge.fusion.config import FusionMethod
from kgforge.modality.view import ModalityView
from kgforge.numerics.ops import make_generator
from kgforge.numerics.tensor import DTYPE


class RedafFusion(BaseFusionModel):
    """
    Temperature-gated softmax over modality members:

        score_m = <V, tanh(v_m)> / sigmoid(zeta_c),  omega = softmax_m(score),  v = sum_m omega_m v_m

    The temperature logit zeta is indexed by node type ``c`` because fusion runs before
    any relation is known. With ``num_nodes`` set, a learnable per-node structural
    vector joins the members.
    """

    method = FusionMethod.redaf

    def __init__(self, num_modalities: int, dim: int, num_contexts: int, num_nodes: int = 0, seed: int = 0):
        super().__init__(num_modalities, dim, dim)
        if num_contexts < 1:
            raise ContractViolation("ReDAF needs at least one temperature context")
        generator = make_generator(seed)
        self.gate = torch.nn.Parameter(torch.randn(dim, generator=generator, dtype=DTYPE) / math.sqrt(dim))
        self.temperature = torch.nn.Parameter(torch.zeros(num_contexts, dtype=DTYPE))
        if num_nodes:
            self.structural = torch.nn.Parameter(
                torch.randn(num_nodes, dim, generator=generator, dtype=DTYPE) / math.sqrt(dim)
            )
        else:
            self.register_parameter("structural", None)

    @property
    def num_members(self) -> int:
        return self.num_modalities + (1 if self.structural is not None else 0)

    def forward(
        self,
        stack: torch.Tensor,
        node_ids: Optional[torch.LongTensor] = None,
        type_ids: Optional[torch.LongTensor] = None,
    ):
        self.check_stack(stack)
        n = stack.shape[0]
        if n == 0:
            empty = stack.new_zeros((0, self.out_dim))
            return empty, stack.new_zeros((0, self.num_members)), empty
        if type_ids is None:
            type_ids = torch.zeros(n, dtype=torch.long)
        if int(type_ids.max()) >= self.temperature.shape[0] or int(type_ids.min()) < 0:
            raise ContractViolation(f"context id outside 0..{self.temperature.shape[0] - 1}")
        members = stack
        if self.structural is not None:
            if node_ids is None:
                raise ContractViolation("structural member enabled but no node ids given")
            members = torch.cat([stack, self.structural[node_ids].unsqueeze(1)], dim=1)
        scores = (torch.tanh(members) @ self.gate) / torch.sigmoid(self.temperature[type_ids]).unsqueeze(1)
        weights = torch.softmax(scores, dim=1)
        weighted = (weights.unsqueeze(-1) * members).sum(dim=1)
        return weighted, weights, stack.mean(dim=1)


def fuse_redaf(view: ModalityView, context_id: int, params: RedafFusion) -> FusedEmbedding:
    return params.fuse_one(view.stack(), node_id=view.node_id, type_id=context_id)

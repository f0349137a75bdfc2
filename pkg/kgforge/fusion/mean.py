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
from typing import Optional
from kgforge.errors import ContractViolation
from kgforge.fusion.base import BaseFusionModel, FusedEmbedding
from kgforge.fusion.config import FusionMethod
from kgforge.modality.view import ModalityView


class MeanFusion(BaseFusionModel):
    """Unweighted mean over modalities. No parameters; D equals the modality dimension."""

    method = FusionMethod.none

    def __init__(self, num_modalities: int, in_dim: int):
        super().__init__(num_modalities, in_dim, in_dim)

    def forward(
        self,
        stack: torch.Tensor,
        node_ids: Optional[torch.LongTensor] = None,
        type_ids: Optional[torch.LongTensor] = None,
    ):
        self.check_stack(stack)
        n, m, _ = stack.shape
        weights = torch.full((n, m), 1.0 / m, dtype=stack.dtype)
        return stack.mean(dim=1), weights, None


def fuse_mean(view: ModalityView) -> FusedEmbedding:
    if view.M == 0:
        raise ContractViolation(f"node {view.node_id}: empty modality view")
    stack = view.stack()
    return MeanFusion(view.M, stack.shape[1]).fuse_one(stack, node_id=view.node_id)

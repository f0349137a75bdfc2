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

import argparse
import torch
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple
from kgforge.errors import ContractViolation
from kgforge.fusion.config import FusionMethod


@dataclass
class FusedEmbedding:
    """Fusion output for one node.

    ``vector`` is the weighted combination; ``mean`` the unweighted mean of the
    (projected) modality vectors, or None for the mean method where the two coincide.
    """

    vector: torch.Tensor
    weights: torch.Tensor
    method: FusionMethod
    mean: Optional[torch.Tensor] = None


def finalize_unified(fused: FusedEmbedding) -> torch.Tensor:
    """u = (weighted + mean) / 2, identity for the mean method."""
    if fused.mean is None:
        return fused.vector
    return 0.5 * (fused.vector + fused.mean)


class BaseFusionModel(torch.nn.Module, ABC):
    """
    Abstract base class for modality fusion. Subclasses map a (n, M, d) stack of modality
    vectors to weighted combinations in the common dimension D.
    """

    method: FusionMethod

    def __init__(self, num_modalities: int, in_dim: int, out_dim: int):
        super().__init__()
        if num_modalities < 1:
            raise ContractViolation("fusion needs at least one modality")
        self.num_modalities = num_modalities
        self.in_dim = in_dim
        self.out_dim = out_dim

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser):
        """
        Adds command line arguments that configure modality fusion:
        - `--fusion.method` (alias `--fusion`): none | attention | redaf. (default: none)
        - `--fusion.dim`: Common dimension D; 0 keeps the modality dimension. (default: 0)
        - `--fusion.structural`: Adds the learnable per-node structural member to ReDAF.
        """
        parser.add_argument(
            "--fusion.method",
            "--fusion",
            type=str,
            choices=[m.value for m in FusionMethod],
            default=FusionMethod.none.value,
            help="How modality embeddings are combined into one vector per node.",
        )
        parser.add_argument(
            "--fusion.dim",
            type=int,
            default=0,
            help="Common fused dimension D. Attention projects into it; 0 keeps the modality dimension.",
        )
        parser.add_argument(
            "--fusion.structural",
            action="store_true",
            default=False,
            help="Enable the learnable per-node structural vector as an extra ReDAF member.",
        )

    def check_stack(self, stack: torch.Tensor):
        if stack.dim() != 3 or stack.shape[1] != self.num_modalities or stack.shape[2] != self.in_dim:
            raise ContractViolation(
                f"{self.method.value} fusion expects (n, {self.num_modalities}, {self.in_dim}), "
                f"got {tuple(stack.shape)}"
            )

    @abstractmethod
    def forward(
        self,
        stack: torch.Tensor,
        node_ids: Optional[torch.LongTensor] = None,
        type_ids: Optional[torch.LongTensor] = None,
    ) -> Tuple[torch.Tensor, torch.Tensor, Optional[torch.Tensor]]:
        """Returns (weighted (n, D), weights (n, members), mean (n, D) or None)."""

    def unified(
        self,
        stack: torch.Tensor,
        node_ids: Optional[torch.LongTensor] = None,
        type_ids: Optional[torch.LongTensor] = None,
    ) -> torch.Tensor:
        """Batched finalize_unified: the (n, D) matrix of u vectors."""
        weighted, _, mean = self(stack, node_ids, type_ids)
        if mean is None:
            return weighted
        return 0.5 * (weighted + mean)

    def fuse_one(self, stack: torch.Tensor, node_id: int = 0, type_id: int = 0) -> FusedEmbedding:
        weighted, weights, mean = self(
            stack.unsqueeze(0),
            torch.tensor([node_id], dtype=torch.long),
            torch.tensor([type_id], dtype=torch.long),
        )
        return FusedEmbedding(
            vector=weighted[0],
            weights=weights[0],
            method=self.method,
            mean=None if mean is None else mean[0],
        )

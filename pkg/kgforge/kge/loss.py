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
import torch.nn.functional as F
from kgforge.errors import ContractViolation


def bce_loss(positive_logits: torch.Tensor, negative_logits: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy averaged over every scored triple (labels 1 then 0)."""
    if len(positive_logits) + len(negative_logits) == 0:
        raise ContractViolation("no scored triples")
    logits = torch.cat([positive_logits, negative_logits])
    labels = torch.cat([torch.ones_like(positive_logits), torch.zeros_like(negative_logits)])
    return F.binary_cross_entropy_with_logits(logits, labels)


def kge_loss(
    positive_logits: torch.Tensor,
    negative_logits: torch.Tensor,
    X: torch.Tensor,
    Z: torch.Tensor,
    reg_weight: float = 0.01,
    alpha: float = 1.0,
) -> torch.Tensor:
    """BCE + alpha * reg_weight * (||X||_F^2 + ||Z||_F^2).

    Scores are pre-sigmoid DistMult logits. Only the product alpha * reg_weight matters.
    """
    if len(positive_logits) == 0 or len(negative_logits) == 0:
        raise ContractViolation("kge_loss needs positive and negative scores")
    loss = bce_loss(positive_logits, negative_logits)
    if alpha and reg_weight:
        loss = loss + alpha * reg_weight * (X.pow(2).sum() + Z.pow(2).sum())
    return loss

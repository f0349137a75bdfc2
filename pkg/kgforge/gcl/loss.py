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
import torch.nn.functional as F
from typing import Optional
from kgforge.errors import ConfigurationError, ContractViolation
from kgforge.gcl.heads import DgiHead, GraceHead
from kgforge.numerics.ops import row_normalize


def _bce_logits(positive: torch.Tensor, negative: torch.Tensor, reduction: str = "mean") -> torch.Tensor:
    logits = torch.cat([positive, negative])
    labels = torch.cat([torch.ones_like(positive), torch.zeros_like(negative)])
    return F.binary_cross_entropy_with_logits(logits, labels, reduction=reduction)


def dgi_loss(
    h_real: torch.Tensor,
    h_corrupt: torch.Tensor,
    summary: torch.Tensor,
    head: Optional[DgiHead] = None,
) -> torch.Tensor:
    """-(1/2N) sum_i [log sigmoid(h_i^T s) + log(1 - sigmoid(h~_i^T s))]."""
    head = head or DgiHead(summary.shape[0])
    return _bce_logits(head(h_real, summary), head(h_corrupt, summary))


def edge_logits(h: torch.Tensor, edges: torch.LongTensor) -> torch.Tensor:
    return (h[edges[0]] * h[edges[1]]).sum(dim=-1)


def ggd_loss(
    h: torch.Tensor,
    positive_edges: torch.LongTensor,
    negative_edges: torch.LongTensor,
    reduction: str = "mean",
) -> torch.Tensor:
    """Edge-reconstruction BCE on y_ij = z_i^T z_j.

    ``reduction`` "sum" is the literal -sum log sigmoid(y) - sum log(1 - sigmoid(y));
    "mean" divides by the number of pairs.
    """
    if positive_edges.shape[1] == 0:
        raise ContractViolation("ggd_loss needs at least one positive edge")
    if reduction not in ("mean", "sum"):
        raise ConfigurationError(f"unknown reduction {reduction!r}", key="gcl.ggd_reduction")
    return _bce_logits(edge_logits(h, positive_edges), edge_logits(h, negative_edges), reduction)


def info_nce(z1: torch.Tensor, z2: torch.Tensor, tau: float, intra_view: bool = False) -> torch.Tensor:
    """Symmetric InfoNCE over cosine similarities, (1/2N) sum_i [l(u_i, v_i) + l(v_i, u_i)].

    Negatives of u_i are the other nodes of the opposite view; ``intra_view`` adds the
    other nodes of u_i's own view to the denominator.
    """
    if not tau > 0:
        raise ConfigurationError(f"temperature must be > 0, got {tau}", key="gcl.tau")
    if z1.shape != z2.shape:
        raise ContractViolation(f"views disagree on shape: {tuple(z1.shape)} vs {tuple(z2.shape)}")
    u, v = row_normalize(z1), row_normalize(z2)

    def one_side(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        cross = a @ b.t() / tau
        logits = cross
        if intra_view:
            own = a @ a.t() / tau
            eye = torch.eye(a.shape[0], dtype=torch.bool)
            logits = torch.cat([cross, own.masked_fill(eye, -math.inf)], dim=1)
        return torch.logsumexp(logits, dim=1) - cross.diagonal()

    return 0.5 * (one_side(u, v) + one_side(v, u)).mean()


def grace_loss(h1: torch.Tensor, h2: torch.Tensor, head: GraceHead, intra_view: bool = False) -> torch.Tensor:
    if h1.shape[0] != h2.shape[0]:
        raise ContractViolation("both views must encode the same node set")
    return info_nce(head(h1), head(h2), head.tau, intra_view)


def _check_distribution(p: torch.Tensor, name: str):
    if (p < 0).any() or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ContractViolation(f"{name} is not a normalized histogram (sum {float(p.sum())})")


def jsd_loss(p: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
    """Jensen-Shannon divergence (natural log) between two histograms on a shared support."""
    if p.shape != q.shape:
        raise ContractViolation(f"histograms disagree on support: {tuple(p.shape)} vs {tuple(q.shape)}")
    _check_distribution(p, "P")
    _check_distribution(q, "Q")
    m = 0.5 * (p + q)

    def kl_to_m(x: torch.Tensor) -> torch.Tensor:
        return (torch.xlogy(x, x) - torch.xlogy(x, m)).sum()

    return 0.5 * kl_to_m(p) + 0.5 * kl_to_m(q)


def score_histogram(logits: torch.Tensor, bins: int = 20) -> torch.Tensor:
    """Normalized histogram of sigmoid(logits) over [0, 1]."""
    probabilities = torch.sigmoid(logits.detach())
    counts = torch.histc(probabilities, bins=bins, min=0.0, max=1.0)
    return counts / counts.sum()

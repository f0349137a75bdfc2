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
from typing import Optional
from kgforge.errors import ContractViolation


def dropout(
    x: torch.Tensor,
    p: float,
    training: bool,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Inverted dropout. Survivors are scaled by 1/(1-p); identity in eval mode.

    Takes an explicit generator so independent training jobs never share RNG state.
    """
    if not 0.0 <= p < 1.0:
        raise ContractViolation(f"dropout rate must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    keep = 1.0 - p
    mask = torch.rand(x.shape, generator=generator, dtype=x.dtype) < keep
    return x * mask.to(x.dtype) / keep


def row_normalize(x: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    """L2-normalizes every row of ``x``."""
    return F.normalize(x, p=2, dim=-1, eps=eps)


def scatter_add(src: torch.Tensor, index: torch.Tensor, size: int) -> torch.Tensor:
    """Sums rows of ``src`` into ``size`` buckets given by ``index``."""
    out = torch.zeros((size,) + tuple(src.shape[1:]), dtype=src.dtype)
    return out.index_add(0, index, src)


def make_generator(seed: int) -> torch.Generator:
    generator = torch.Generator()
    generator.manual_seed(int(seed) % (2**63))
    return generator

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
from kgforge.errors import ConfigurationError
from kgforge.numerics.ops import make_generator
from kgforge.numerics.tensor import DTYPE


class DgiHead(torch.nn.Module):
    """Discriminator scoring node embeddings against a graph summary.

    Dot product h_i^T s by default; with ``bilinear`` a learnable W gives h_i^T W s.
    """

    def __init__(self, dim: int, bilinear: bool = False, seed: int = 0):
        super().__init__()
        if bilinear:
            generator = make_generator(seed)
            self.weight = torch.nn.Parameter(
                torch.eye(dim, dtype=DTYPE)
                + torch.randn(dim, dim, generator=generator, dtype=DTYPE) / math.sqrt(dim)
            )
        else:
            self.register_parameter("weight", None)

    @staticmethod
    def readout(h: torch.Tensor) -> torch.Tensor:
        """sigmoid of the mean node embedding."""
        return torch.sigmoid(h.mean(dim=0))

    def forward(self, h: torch.Tensor, summary: torch.Tensor) -> torch.Tensor:
        if self.weight is None:
            return h @ summary
        return h @ (self.weight @ summary)


class GraceHead(torch.nn.Module):
    """Projection k -> k -> k with ReLU in between, plus the InfoNCE temperature."""

    def __init__(self, dim: int, tau: float = 0.5, seed: int = 0):
        super().__init__()
        if not tau > 0:
            raise ConfigurationError(f"temperature must be > 0, got {tau}", key="gcl.tau")
        self.tau = tau
        generator = make_generator(seed)
        self.fc1 = torch.nn.Linear(dim, dim, dtype=DTYPE)
        self.fc2 = torch.nn.Linear(dim, dim, dtype=DTYPE)
        with torch.no_grad():
            for layer in (self.fc1, self.fc2):
                layer.weight.copy_(torch.randn(dim, dim, generator=generator, dtype=DTYPE) / math.sqrt(dim))
                layer.bias.zero_()

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.fc2(torch.relu(self.fc1(z)))

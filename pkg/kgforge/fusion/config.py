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

from enum import Enum
from dataclasses import dataclass
import bittensor as bt
from kgforge.errors import ConfigurationError


class FusionMethod(Enum):
    none = "none"
    attention = "attention"
    redaf = "redaf"


@dataclass(frozen=True)
class DefaultFusionConfig:
    """Fusion defaults.
    Note: ``dim`` 0 keeps the modality dimension as the common dimension D.
    """

    method: str = FusionMethod.none.value
    dim: int = 0
    structural: bool = False

    def __post_init__(self):
        if self.method not in {m.value for m in FusionMethod}:
            raise ConfigurationError(
                f"unknown fusion method {self.method!r}, expected one of "
                f"{[m.value for m in FusionMethod]}",
                key="fusion",
            )
        if self.dim < 0:
            raise ConfigurationError(f"fusion dim must be >= 0, got {self.dim}", key="fusion.dim")

    @classmethod
    def from_config(cls, config: "bt.Config") -> "DefaultFusionConfig":
        return cls(
            method=config.fusion.method,
            dim=config.fusion.dim,
            structural=config.fusion.structural,
        )

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

import bittensor as bt
from kgforge.fusion.base import BaseFusionModel
from kgforge.fusion.config import DefaultFusionConfig, FusionMethod
from kgforge.fusion.mean import MeanFusion
from kgforge.fusion.attention import AttentionFusion
from kgforge.fusion.redaf import RedafFusion


def build_fusion(
    config: DefaultFusionConfig,
    num_modalities: int,
    in_dim: int,
    num_types: int,
    num_nodes: int,
    seed: int,
) -> BaseFusionModel:
    method = FusionMethod(config.method)
    if method == FusionMethod.attention:
        model = AttentionFusion(num_modalities, in_dim, config.dim or in_dim, seed=seed)
    elif method == FusionMethod.redaf:
        if config.dim and config.dim != in_dim:
            bt.logging.warning(
                f"ReDAF fuses in the modality dimension; ignoring fusion.dim={config.dim}"
            )
        model = RedafFusion(
            num_modalities,
            in_dim,
            num_contexts=num_types,
            num_nodes=num_nodes if config.structural else 0,
            seed=seed,
        )
    else:
        model = MeanFusion(num_modalities, in_dim)
    bt.logging.debug(
        f"build_fusion(): {method.value}, {sum(p.numel() for p in model.parameters())} parameters"
    )
    return model

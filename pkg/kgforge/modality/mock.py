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

from typing import Dict, Sequence
from kgforge.errors import ContractViolation
from kgforge.graph.store import KnowledgeGraph
from kgforge.numerics.ops import row_normalize
from kgforge.modality.table import EmbeddingTable, Modality
from kgforge.modality.view import keyed_fill


def mock_provider(
    graph: KnowledgeGraph,
    seed: int,
    dim: int,
    modalities: Sequence[str] = (Modality.sequence.value, Modality.description.value),
) -> Dict[str, EmbeddingTable]:
    """Fully populated unit-norm tables standing in for language-model dumps.

    Vectors carry no information about the graph; runs on them are the random-feature
    baseline.
    """
    if dim <= 0:
        raise ContractViolation(f"dimension must be positive, got {dim}")
    tables = {}
    for modality in modalities:
        rows = {
            node_id: row_normalize(keyed_fill(seed, node_id, f"mock:{modality}", dim))
            for node_id in range(graph.num_nodes)
        }
        tables[modality] = EmbeddingTable(modality=modality, dim=dim, rows=rows)
    return tables

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
import numpy as np
import networkx as nx
import bittensor as bt
from typing import Dict, List, Sequence, Tuple
from kgforge.errors import ConfigurationError
from kgforge.graph.store import DISEASE, DRUG, GENE_PROTEIN, KnowledgeGraph, NodeRecord, Triple
from kgforge.modality.table import EmbeddingTable, Modality

# (relation name, head type, tail type); a fixture with r relations uses the first r.
RELATION_SCHEMA = [
    ("drug_drug", DRUG, DRUG),
    ("drug_protein", DRUG, GENE_PROTEIN),
    ("protein_disease", GENE_PROTEIN, DISEASE),
    ("protein_protein", GENE_PROTEIN, GENE_PROTEIN),
    ("drug_disease", DRUG, DISEASE),
    ("disease_disease", DISEASE, DISEASE),
]
NODE_TYPES = (DRUG, GENE_PROTEIN, DISEASE)


def synthetic_graph(
    num_nodes: int = 300,
    num_relations: int = 3,
    num_communities: int = 4,
    p_in: float = 0.3,
    p_out: float = 0.01,
    dim: int = 64,
    noise: float = 0.5,
    missing: float = 0.0,
    modalities: Sequence[str] = (Modality.sequence.value, Modality.description.value),
    seed: int = 0,
) -> Tuple[KnowledgeGraph, Dict[str, EmbeddingTable]]:
    """Heterogeneous fixture with attribute-correlated edges.

    Every node gets a type (round robin over drug, gene/protein, disease) and a latent
    community. Candidate edges come from a stochastic block model over the communities;
    an edge is kept when its endpoint types match a relation of the schema. Attribute
    vectors are the community centroid of their modality plus Gaussian noise, so
    attributes predict edges. ``missing`` drops that fraction of rows from each table.
    """
    if not 1 <= num_relations <= len(RELATION_SCHEMA):
        raise ConfigurationError(
            f"num_relations must lie in 1..{len(RELATION_SCHEMA)}, got {num_relations}",
            key="synth.num_relations",
        )
    if num_nodes < len(NODE_TYPES) * 2 or num_communities < 1:
        raise ConfigurationError(
            f"need at least {len(NODE_TYPES) * 2} nodes and one community", key="synth.num_nodes"
        )
    if not 0.0 <= missing < 1.0:
        raise ConfigurationError(f"missing fraction must lie in [0, 1), got {missing}", key="synth.missing")

    rng = np.random.default_rng(seed)
    nodes: List[NodeRecord] = []
    community = np.zeros(num_nodes, dtype=np.int64)
    for node_id in range(num_nodes):
        node_type = NODE_TYPES[node_id % len(NODE_TYPES)]
        community[node_id] = (node_id // len(NODE_TYPES)) % num_communities
        subtype = ("molecule", "antibody")[node_id % 2] if node_type == DRUG else None
        nodes.append(
            NodeRecord(
                node_id=node_id,
                external_id=f"SYN{node_id:05d}",
                node_type=node_type,
                subtype=subtype,
                name=f"{node_type} {node_id}",
            )
        )

    members = [np.flatnonzero(community == c).tolist() for c in range(num_communities)]
    probabilities = [
        [p_in if a == b else p_out for b in range(num_communities)] for a in range(num_communities)
    ]
    block_model = nx.stochastic_block_model(
        [len(m) for m in members],
        probabilities,
        nodelist=[node_id for m in members for node_id in m],
        seed=seed,
    )

    schema = RELATION_SCHEMA[:num_relations]
    by_types = {(head_type, tail_type): index for index, (_, head_type, tail_type) in enumerate(schema)}
    triples: List[Triple] = []
    for u, v in sorted(block_model.edges()):
        types = (nodes[u].node_type, nodes[v].node_type)
        if types in by_types:
            triples.append(Triple(u, by_types[types], v))
        elif types[::-1] in by_types:
            triples.append(Triple(v, by_types[types[::-1]], u))

    graph = KnowledgeGraph(
        nodes=nodes, relations=[name for name, _, _ in schema], triples=triples
    )

    tables: Dict[str, EmbeddingTable] = {}
    for modality in modalities:
        centroids = rng.standard_normal((num_communities, dim))
        centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
        vectors = centroids[community] + noise * rng.standard_normal((num_nodes, dim)) / np.sqrt(dim)
        keep = rng.random(num_nodes) >= missing
        rows = {
            node_id: torch.from_numpy(vectors[node_id].copy())
            for node_id in range(num_nodes)
            if keep[node_id]
        }
        tables[modality] = EmbeddingTable(modality=modality, dim=dim, rows=rows)

    bt.logging.info(f"synthetic_graph(): {graph.summary()} communities={num_communities}")
    return graph, tables

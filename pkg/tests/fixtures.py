import os
import numpy as np
from typing import Dict, List, Sequence, Tuple
from kgforge.graph.store import DISEASE, DRUG, GENE_PROTEIN, KnowledgeGraph, NodeRecord, Triple, save_graph

TYPES = (DRUG, GENE_PROTEIN, DISEASE)


def make_graph(
    num_nodes: int,
    triples: Sequence[Tuple[int, int, int]],
    relations: Sequence[str] = ("r0", "r1", "r2"),
    types: Sequence[str] = TYPES,
) -> KnowledgeGraph:
    """Round-robin typed nodes 0..num_nodes-1 plus the given triples."""
    nodes = [
        NodeRecord(node_id=i, external_id=f"N{i}", node_type=types[i % len(types)], name=f"node {i}")
        for i in range(num_nodes)
    ]
    return KnowledgeGraph(nodes=nodes, relations=list(relations), triples=[Triple(*t) for t in triples])


def ring_graph(num_nodes: int = 12, num_relations: int = 2) -> KnowledgeGraph:
    """Every node links to the next two; relation = head id mod num_relations."""
    triples = []
    for i in range(num_nodes):
        for step in (1, 2):
            triples.append((i, i % num_relations, (i + step) % num_nodes))
    return make_graph(num_nodes, triples, relations=[f"r{r}" for r in range(num_relations)])


def write_graph(graph: KnowledgeGraph, directory: str) -> Tuple[str, str]:
    nodes_path = os.path.join(directory, "nodes.tsv")
    triples_path = os.path.join(directory, "triples.tsv")
    save_graph(graph, nodes_path, triples_path)
    return nodes_path, triples_path


def random_graph(num_nodes: int, num_triples: int, num_relations: int = 3, seed: int = 0, isolated: int = 0) -> KnowledgeGraph:
    """Distinct random triples over the first ``num_nodes`` nodes, plus ``isolated`` edgeless nodes."""
    rng = np.random.default_rng(seed)
    triples = set()
    while len(triples) < num_triples:
        head, tail = (int(v) for v in rng.integers(num_nodes, size=2))
        if head != tail:
            triples.add((head, int(rng.integers(num_relations)), tail))
    return make_graph(num_nodes + isolated, sorted(triples), relations=[f"r{r}" for r in range(num_relations)])

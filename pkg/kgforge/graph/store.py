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
import bittensor as bt
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple
from kgforge.errors import ContractViolation, LoadError

GENE_PROTEIN = "gene/protein"
DRUG = "drug"
DISEASE = "disease"
KNOWN_NODE_TYPES = (GENE_PROTEIN, DRUG, DISEASE)

NODE_HEADER = ["node_id", "external_id", "node_type", "subtype", "name"]
TRIPLE_HEADER = ["head_id", "relation_name", "tail_id"]


@dataclass(frozen=True)
class NodeRecord:
    node_id: int
    external_id: str
    node_type: str  # one of KNOWN_NODE_TYPES or any other free-form type name
    subtype: Optional[str] = None  # e.g. molecule vs antibody for drugs
    name: str = ""


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass
class KnowledgeGraph:
    """Heterogeneous graph: typed nodes, named relations, (h, r, t) triples.

    Duplicate triples are dropped on construction and counted in ``duplicate_count``.
    ``parent_ids`` maps local node ids back to the graph this one was extracted from.
    The graph is treated as immutable once built; indices are computed lazily.
    """

    nodes: List[NodeRecord]
    relations: List[str]
    triples: List[Triple]
    duplicate_count: int = 0
    parent_ids: Optional[List[int]] = None

    def __post_init__(self):
        n, r = len(self.nodes), len(self.relations)
        for index, node in enumerate(self.nodes):
            if node.node_id != index:
                raise ContractViolation(
                    f"node ids must be dense 0..n-1, found {node.node_id} at position {index}"
                )
        seen: Set[Triple] = set()
        unique: List[Triple] = []
        for triple in self.triples:
            triple = Triple(int(triple[0]), int(triple[1]), int(triple[2]))
            if not (0 <= triple.head < n and 0 <= triple.tail < n and 0 <= triple.relation < r):
                raise ContractViolation(f"triple {tuple(triple)} references unknown ids")
            if triple in seen:
                self.duplicate_count += 1
                continue
            seen.add(triple)
            unique.append(triple)
        self.triples = unique
        self._triple_set = seen

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_relations(self) -> int:
        return len(self.relations)

    @property
    def num_triples(self) -> int:
        return len(self.triples)

    def contains(self, triple: Tuple[int, int, int]) -> bool:
        return tuple(triple) in self._triple_set

    def relation_id(self, name: str) -> int:
        return self.relation_index[name]

    def node_type(self, node_id: int) -> str:
        return self.nodes[node_id].node_type

    @cached_property
    def relation_index(self) -> Dict[str, int]:
        return {name: index for index, name in enumerate(self.relations)}

    @cached_property
    def node_types(self) -> List[str]:
        return sorted({node.node_type for node in self.nodes})

    @cached_property
    def type_index(self) -> Dict[str, List[int]]:
        index: Dict[str, List[int]] = {node_type: [] for node_type in self.node_types}
        for node in self.nodes:
            index[node.node_type].append(node.node_id)
        return index

    @cached_property
    def node_type_ids(self) -> torch.LongTensor:
        """Position of each node's type in ``node_types``."""
        lookup = {node_type: i for i, node_type in enumerate(self.node_types)}
        return torch.tensor([lookup[node.node_type] for node in self.nodes], dtype=torch.long)

    @cached_property
    def out_neighbors(self) -> List[List[Tuple[int, int]]]:
        adjacency: List[List[Tuple[int, int]]] = [[] for _ in self.nodes]
        for head, relation, tail in self.triples:
            adjacency[head].append((relation, tail))
        return adjacency

    @cached_property
    def in_neighbors(self) -> List[List[Tuple[int, int]]]:
        adjacency: List[List[Tuple[int, int]]] = [[] for _ in self.nodes]
        for head, relation, tail in self.triples:
            adjacency[tail].append((relation, head))
        return adjacency

    @cached_property
    def out_csr(self) -> Tuple[np.ndarray, np.ndarray]:
        """(row pointer, tail ids) over out-edges, for random walks."""
        pointer = np.zeros(self.num_nodes + 1, dtype=np.int64)
        for head, _, _ in self.triples:
            pointer[head + 1] += 1
        pointer = np.cumsum(pointer)
        tails = np.array(
            [tail for neighbors in self.out_neighbors for _, tail in neighbors],
            dtype=np.int64,
        )
        return pointer, tails

    @cached_property
    def relation_types(self) -> Dict[int, Tuple[Tuple[str, ...], Tuple[str, ...]]]:
        """relation id -> (head node types, tail node types) observed in the triples."""
        heads: Dict[int, Set[str]] = {}
        tails: Dict[int, Set[str]] = {}
        for head, relation, tail in self.triples:
            heads.setdefault(relation, set()).add(self.nodes[head].node_type)
            tails.setdefault(relation, set()).add(self.nodes[tail].node_type)
        return {
            relation: (tuple(sorted(heads[relation])), tuple(sorted(tails[relation])))
            for relation in heads
        }

    @cached_property
    def triple_tensor(self) -> torch.LongTensor:
        if not self.triples:
            return torch.zeros((0, 3), dtype=torch.long)
        return torch.tensor(self.triples, dtype=torch.long)

    def summary(self) -> str:
        return (
            f"|V|={self.num_nodes} |R|={self.num_relations} |E|={self.num_triples} "
            f"duplicates={self.duplicate_count}"
        )


def _read_rows(path: str, header: Sequence[str]):
    try:
        f = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise LoadError("file not found", path=path)
    with f:
        lines = f.read().splitlines()
    if not lines or lines[0].split("\t") != list(header):
        raise LoadError(f"expected header {'<TAB>'.join(header)}", path=path, line=1)
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        yield line_number, line.split("\t")


def load_graph(node_path: str, triple_path: str) -> KnowledgeGraph:
    """Loads ``nodes.tsv`` and ``triples.tsv`` into a KnowledgeGraph."""
    bt.logging.info("load_graph()")
    records: Dict[int, NodeRecord] = {}
    keys: Set[Tuple[str, str]] = set()
    for line_number, row in _read_rows(node_path, NODE_HEADER):
        if len(row) != len(NODE_HEADER):
            raise LoadError(
                f"expected {len(NODE_HEADER)} columns, got {len(row)}",
                path=node_path,
                line=line_number,
            )
        try:
            node_id = int(row[0])
        except ValueError:
            raise LoadError(f"node id {row[0]!r} is not an integer", path=node_path, line=line_number)
        if node_id in records:
            raise LoadError(f"duplicate node id {node_id}", path=node_path, line=line_number)
        key = (row[2], row[1])
        if key in keys:
            raise LoadError(
                f"duplicate (node type, external id) {key}", path=node_path, line=line_number
            )
        keys.add(key)
        records[node_id] = NodeRecord(
            node_id=node_id,
            external_id=row[1],
            node_type=row[2],
            subtype=row[3] or None,
            name=row[4],
        )
    if sorted(records) != list(range(len(records))):
        raise LoadError("node ids must be dense 0..n-1", path=node_path)
    nodes = [records[i] for i in range(len(records))]

    relations: List[str] = []
    relation_index: Dict[str, int] = {}
    triples: List[Triple] = []
    for line_number, row in _read_rows(triple_path, TRIPLE_HEADER):
        if len(row) != len(TRIPLE_HEADER):
            raise LoadError(
                f"expected {len(TRIPLE_HEADER)} columns, got {len(row)}",
                path=triple_path,
                line=line_number,
            )
        try:
            head, tail = int(row[0]), int(row[2])
        except ValueError:
            raise LoadError(f"malformed node id in row {row}", path=triple_path, line=line_number)
        for node_id in (head, tail):
            if node_id not in records:
                raise LoadError(
                    f"triple references unknown node {node_id}",
                    path=triple_path,
                    line=line_number,
                )
        if row[1] not in relation_index:
            relation_index[row[1]] = len(relations)
            relations.append(row[1])
        triples.append(Triple(head, relation_index[row[1]], tail))

    graph = KnowledgeGraph(nodes=nodes, relations=relations, triples=triples)
    if graph.duplicate_count:
        bt.logging.warning(f"Dropped {graph.duplicate_count} duplicate triple(s)")
    bt.logging.info(f"Loaded graph {graph.summary()}")
    return graph


def save_graph(graph: KnowledgeGraph, node_path: str, triple_path: str):
    with open(node_path, "w", encoding="utf-8") as f:
        f.write("\t".join(NODE_HEADER) + "\n")
        for node in graph.nodes:
            f.write(
                f"{node.node_id}\t{node.external_id}\t{node.node_type}\t{node.subtype or ''}\t{node.name}\n"
            )
    with open(triple_path, "w", encoding="utf-8") as f:
        f.write("\t".join(TRIPLE_HEADER) + "\n")
        for head, relation, tail in graph.triples:
            f.write(f"{head}\t{graph.relations[relation]}\t{tail}\n")
    bt.logging.success(prefix="Saved graph", sufix=f"<blue>{node_path}</blue> <blue>{triple_path}</blue>")


def homogeneous_subgraph(graph: KnowledgeGraph, node_type: str) -> KnowledgeGraph:
    """Nodes of ``node_type`` and the triples whose head and tail both have that type.

    Local ids are re-densified; ``parent_ids[local] == parent id``.
    """
    parent_ids = list(graph.type_index.get(node_type, []))
    local = {parent: index for index, parent in enumerate(parent_ids)}
    nodes = [
        NodeRecord(
            node_id=index,
            external_id=graph.nodes[parent].external_id,
            node_type=node_type,
            subtype=graph.nodes[parent].subtype,
            name=graph.nodes[parent].name,
        )
        for index, parent in enumerate(parent_ids)
    ]
    triples = [
        Triple(local[head], relation, local[tail])
        for head, relation, tail in graph.triples
        if head in local and tail in local
    ]
    return KnowledgeGraph(
        nodes=nodes, relations=list(graph.relations), triples=triples, parent_ids=parent_ids
    )


def restrict_triples(graph: KnowledgeGraph, indices: Sequence[int]) -> KnowledgeGraph:
    """Same nodes and relations, only the triples at ``indices``."""
    return KnowledgeGraph(
        nodes=graph.nodes,
        relations=graph.relations,
        triples=[graph.triples[i] for i in indices],
    )

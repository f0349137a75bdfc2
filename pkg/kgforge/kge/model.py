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
import bittensor as bt
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple
from kgforge.errors import ContractViolation, LoadError
from kgforge.fusion.base import BaseFusionModel
from kgforge.graph.store import KnowledgeGraph, Triple
from kgforge.kge.distmult import RelationEmbedding, distmult_score
from kgforge.kge.rgcn import Rgcn
from kgforge.kge.saint import induced_triples
from kgforge.modality.table import EmbeddingTable
from kgforge.numerics.tensor import DTYPE, ParamStore


class FeatureSource(Enum):
    fused = "fused"
    gcl = "gcl"


class FusedFeatures(torch.nn.Module):
    """Node features computed by a fusion model over the modality stack."""

    prefix = "fusion"

    def __init__(self, stack: torch.Tensor, fusion: BaseFusionModel, type_ids: torch.LongTensor):
        super().__init__()
        self.register_buffer("stack", stack)
        self.register_buffer("type_ids", type_ids)
        self.fusion = fusion

    @property
    def dim(self) -> int:
        return self.fusion.out_dim

    @property
    def module(self) -> torch.nn.Module:
        return self.fusion

    def forward(self, node_ids: torch.LongTensor) -> torch.Tensor:
        return self.fusion.unified(self.stack[node_ids], node_ids, self.type_ids[node_ids])


class TableFeatures(torch.nn.Module):
    """Node features looked up from exported embedding tables (contrastively refined z)."""

    prefix = "features"

    def __init__(self, matrix: torch.Tensor, trainable: bool = False):
        super().__init__()
        self.table = torch.nn.Parameter(matrix.clone(), requires_grad=trainable)

    @classmethod
    def from_tables(cls, tables: Sequence[EmbeddingTable], num_nodes: int, trainable: bool = False) -> "TableFeatures":
        dims = {table.dim for table in tables}
        if len(dims) != 1:
            raise LoadError(f"feature tables disagree on dimension: {sorted(dims)}")
        matrix = torch.zeros((num_nodes, dims.pop()), dtype=DTYPE)
        covered = torch.zeros(num_nodes, dtype=torch.bool)
        for table in tables:
            for node_id, vector in table.rows.items():
                if 0 <= node_id < num_nodes:
                    matrix[node_id] = vector
                    covered[node_id] = True
        if not covered.all():
            missing = torch.nonzero(~covered).flatten().tolist()
            raise LoadError(f"feature tables do not cover node(s) {missing[:10]}")
        return cls(matrix, trainable)

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    @property
    def module(self) -> torch.nn.Module:
        return self

    def forward(self, node_ids: torch.LongTensor) -> torch.Tensor:
        return self.table[node_ids]


class KgeModel(torch.nn.Module):
    """Feature source, RGCN encoder and DistMult relation factors.

    ``message_graph`` (the training graph) supplies the edges messages travel along at
    prediction time.
    """

    def __init__(self, features: torch.nn.Module, rgcn: Rgcn, relations: RelationEmbedding, message_graph: KnowledgeGraph):
        super().__init__()
        self.features = features
        self.rgcn = rgcn
        self.relations = relations
        self.message_graph = message_graph

    def modules_by_prefix(self) -> Dict[str, torch.nn.Module]:
        return {self.features.prefix: self.features.module, "rgcn": self.rgcn, "distmult": self.relations}

    def store(self, trainable_only: bool = True) -> ParamStore:
        return ParamStore.from_modules(self.modules_by_prefix(), trainable_only)

    def encode(
        self,
        nodes: torch.LongTensor,
        triples: Optional[torch.LongTensor] = None,
        training: bool = False,
        generator: Optional[torch.Generator] = None,
    ) -> Tuple[torch.Tensor, torch.LongTensor]:
        """Latent X for sorted parent ids ``nodes`` plus the parent -> row index.

        ``triples`` (parent ids) defaults to the message-graph triples induced on ``nodes``.
        """
        if triples is None:
            triples = induced_triples(self.message_graph, nodes.tolist())
        index = torch.full((self.message_graph.num_nodes,), -1, dtype=torch.long)
        index[nodes] = torch.arange(len(nodes))
        local = triples
        if len(triples):
            local = torch.stack([index[triples[:, 0]], triples[:, 1], index[triples[:, 2]]], dim=1)
        return self.rgcn(self.features(nodes), local, training, generator), index

    def logits(self, X: torch.Tensor, index: torch.LongTensor, triples: torch.LongTensor) -> torch.Tensor:
        if not len(triples):
            return torch.zeros(0, dtype=DTYPE)
        return distmult_score(X[index[triples[:, 0]]], self.relations(triples[:, 1]), X[index[triples[:, 2]]])


def as_triple_tensor(triples) -> torch.LongTensor:
    if isinstance(triples, torch.Tensor):
        return triples.long().reshape(-1, 3)
    if not len(triples):
        return torch.zeros((0, 3), dtype=torch.long)
    return torch.tensor([tuple(triple) for triple in triples], dtype=torch.long)


def predict_links(model: KgeModel, triples: Sequence[Triple], features: Optional[torch.nn.Module] = None) -> torch.Tensor:
    """sigmoid(DistMult(X_h, Z_r, X_t)) per triple, strictly inside (0, 1).

    X comes from a full-graph encoding over the message graph in eval mode, so scores do
    not depend on batch order. ``features`` optionally swaps in another feature source,
    e.g. attribute tables that cover nodes unseen during training.
    """
    triples = as_triple_tensor(triples)
    num_nodes = model.message_graph.num_nodes
    if len(triples):
        if int(triples[:, [0, 2]].max()) >= num_nodes or int(triples[:, [0, 2]].min()) < 0:
            raise ContractViolation(f"triple references a node outside 0..{num_nodes - 1}")
        if int(triples[:, 1].max()) >= model.relations.Z.shape[0]:
            message = f"unknown relation id {int(triples[:, 1].max())}"
            bt.logging.error(message)
            raise ContractViolation(message)
    original = model.features
    if features is not None:
        model.features = features
    try:
        with torch.no_grad():
            nodes = torch.arange(num_nodes)
            X, index = model.encode(nodes)
            logits = model.logits(X, index, triples)
    finally:
        model.features = original
    finfo = torch.finfo(DTYPE)
    return torch.sigmoid(logits).clamp(finfo.tiny, 1.0 - finfo.eps)

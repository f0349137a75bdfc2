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

import copy
import time
import argparse
import torch
import numpy as np
import bittensor as bt
from enum import Enum
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple
from kgforge.errors import ConfigurationError
from kgforge.event import EventLogger, TrainingEvent
from kgforge.fusion.base import BaseFusionModel
from kgforge.gcl.augment import augment, plain_view, sample_non_edges
from kgforge.gcl.encoder import GcnEncoder
from kgforge.gcl.heads import DgiHead, GraceHead
from kgforge.gcl.loss import dgi_loss, edge_logits, ggd_loss, grace_loss, jsd_loss, score_histogram
from kgforge.graph.store import KnowledgeGraph, homogeneous_subgraph
from kgforge.modality.table import EmbeddingTable, gcl_tag
from kgforge.numerics import (
    OptimConfig,
    ParamStore,
    adam_step,
    clip_gradients,
    fit_warmup,
    forward_backward,
    row_normalize,
    schedule_lr,
)
from kgforge.utils import derive_seed, thread_limit, write_csv


class GclMethod(Enum):
    none = "none"
    dgi = "dgi"
    dgi_bilinear = "dgi-bilinear"
    ggd = "ggd-paper"
    grace = "grace"


@dataclass(frozen=True)
class GclConfig:
    """Contrastive pretraining defaults.
    Note: augmentation probabilities follow the dropout scale of the optimizer defaults.
    """

    method: str = GclMethod.grace.value
    hidden_dim: int = 128
    dim: int = 128
    p_mask: float = 0.2
    p_drop: float = 0.2
    tau: float = 0.5
    intra_view_negatives: bool = False
    ggd_reduction: str = "mean"
    histogram_bins: int = 20

    def __post_init__(self):
        if self.method not in {m.value for m in GclMethod}:
            raise ConfigurationError(
                f"unknown gcl method {self.method!r}, expected one of {[m.value for m in GclMethod]}",
                key="gcl",
            )
        for key in ("p_mask", "p_drop"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigurationError(f"{key} must lie in [0, 1]", key=f"gcl.{key}")
        if not self.tau > 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.tau}", key="gcl.tau")
        if self.hidden_dim < 1 or self.dim < 1:
            raise ConfigurationError("encoder dimensions must be positive", key="model.dim")
        if self.ggd_reduction not in ("mean", "sum"):
            raise ConfigurationError(f"unknown reduction {self.ggd_reduction!r}", key="gcl.ggd_reduction")

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser):
        parser.add_argument(
            "--gcl.method",
            "--gcl",
            type=str,
            choices=[m.value for m in GclMethod],
            default=cls.method,
            help="Contrastive objective used to pretrain the per-node-type encoders.",
        )
        parser.add_argument("--gcl.p_mask", type=float, default=cls.p_mask, help="Node feature masking probability.")
        parser.add_argument("--gcl.p_drop", type=float, default=cls.p_drop, help="Edge dropping probability.")
        parser.add_argument("--gcl.tau", type=float, default=cls.tau, help="InfoNCE temperature.")
        parser.add_argument(
            "--gcl.intra_view_negatives",
            action="store_true",
            default=False,
            help="Also contrast against the other nodes of the same view in the InfoNCE denominator.",
        )
        parser.add_argument(
            "--gcl.ggd_reduction",
            type=str,
            choices=["mean", "sum"],
            default=cls.ggd_reduction,
            help="Reduction of the edge-reconstruction loss.",
        )
        parser.add_argument(
            "--gcl.histogram_bins",
            type=int,
            default=cls.histogram_bins,
            help="Bins of the score histograms compared by the JSD diagnostic.",
        )

    @classmethod
    def from_config(cls, config: "bt.Config") -> "GclConfig":
        return cls(
            method=config.gcl.method,
            hidden_dim=config.model.hidden_dim,
            dim=config.model.dim,
            p_mask=config.gcl.p_mask,
            p_drop=config.gcl.p_drop,
            tau=config.gcl.tau,
            intra_view_negatives=config.gcl.intra_view_negatives,
            ggd_reduction=config.gcl.ggd_reduction,
            histogram_bins=config.gcl.histogram_bins,
        )


@dataclass
class GclJobResult:
    node_type: str
    table: EmbeddingTable
    fusion: BaseFusionModel
    encoder: Optional[GcnEncoder] = None
    head: Optional[torch.nn.Module] = None
    params: ParamStore = field(default_factory=ParamStore)
    curve: List[Tuple[int, float]] = field(default_factory=list)
    best_loss: Optional[float] = None
    identity_fallback: bool = False

    @property
    def initial_loss(self) -> Optional[float]:
        return self.curve[0][1] if self.curve else None


def write_curve(path: str, curve: List[Tuple[int, float]]) -> str:
    return write_csv(path, ["step", "loss"], ((step, repr(loss)) for step, loss in curve))


class _PretrainJob:
    """Trains one encoder on one node type's homogeneous subgraph."""

    def __init__(
        self,
        graph: KnowledgeGraph,
        node_type: str,
        stack: torch.Tensor,
        fusion: BaseFusionModel,
        config: GclConfig,
        optim: OptimConfig,
        seed: int,
        events: EventLogger,
    ):
        self.node_type = node_type
        self.config = config
        self.optim = optim
        self.events = events
        self.seed = derive_seed(seed, "gcl", node_type)
        self.subgraph = homogeneous_subgraph(graph, node_type)
        self.parents = torch.tensor(self.subgraph.parent_ids, dtype=torch.long)
        self.stack = stack[self.parents]
        self.type_ids = torch.full(
            (len(self.parents),), graph.node_types.index(node_type), dtype=torch.long
        )
        self.fusion = fusion
        self.method = GclMethod(config.method)

    def features(self) -> torch.Tensor:
        return self.fusion.unified(self.stack, self.parents, self.type_ids)

    def export(self, z: torch.Tensor) -> EmbeddingTable:
        rows = {int(parent): z[local].detach().clone() for local, parent in enumerate(self.parents.tolist())}
        return EmbeddingTable(modality=gcl_tag(self.node_type), dim=z.shape[1], rows=rows)

    def loss(self, encoder: GcnEncoder, head, rng: np.random.Generator):
        features = self.features()
        if self.method in (GclMethod.dgi, GclMethod.dgi_bilinear):
            view = plain_view(self.subgraph, features)
            corrupt = plain_view(self.subgraph, features[torch.from_numpy(rng.permutation(len(features)))])
            h, h_corrupt = encoder(view), encoder(corrupt)
            summary = head.readout(h)
            positive, negative = head(h, summary), head(h_corrupt, summary)
            loss = dgi_loss(h, h_corrupt, summary, head)
        elif self.method == GclMethod.ggd:
            view = augment(self.subgraph, features, self.config.p_mask, self.config.p_drop, int(rng.integers(2**62)))
            h = encoder(view)
            edges = plain_view(self.subgraph, features).edges
            non_edges = sample_non_edges(edges, len(features), edges.shape[1], rng)
            positive, negative = edge_logits(h, edges), edge_logits(h, non_edges)
            loss = ggd_loss(h, edges, non_edges, self.config.ggd_reduction)
        else:
            view1 = augment(self.subgraph, features, self.config.p_mask, self.config.p_drop, int(rng.integers(2**62)))
            view2 = augment(self.subgraph, features, self.config.p_mask, self.config.p_drop, int(rng.integers(2**62)))
            h1, h2 = encoder(view1), encoder(view2)
            similarity = row_normalize(head(h1)) @ row_normalize(head(h2)).t() / head.tau
            off_diagonal = ~torch.eye(len(similarity), dtype=torch.bool)
            positive, negative = similarity.diagonal(), similarity[off_diagonal]
            loss = grace_loss(h1, h2, head, self.config.intra_view_negatives)

        jsd = torch.tensor(0.0)
        if len(positive) and len(negative):
            bins = self.config.histogram_bins
            jsd = jsd_loss(score_histogram(positive, bins), score_histogram(negative, bins))
        return loss, jsd

    def run(self) -> GclJobResult:
        n = len(self.parents)
        bt.logging.info(f"pretrain({self.node_type}): {n} nodes, {self.subgraph.num_triples} edges, method {self.method.value}")
        if self.method == GclMethod.none:
            return GclJobResult(
                node_type=self.node_type,
                table=self.export(self.features().detach()),
                fusion=self.fusion,
            )

        identity_fallback = self.subgraph.num_triples == 0
        if identity_fallback:
            bt.logging.warning(
                f"pretrain({self.node_type}): no same-type edges, falling back to identity propagation"
            )

        encoder = GcnEncoder(
            self.fusion.out_dim, self.config.hidden_dim, self.config.dim, seed=derive_seed(self.seed, "encoder")
        )
        head = None
        if self.method in (GclMethod.dgi, GclMethod.dgi_bilinear):
            head = DgiHead(self.config.dim, self.method == GclMethod.dgi_bilinear, seed=derive_seed(self.seed, "head"))
        elif self.method == GclMethod.grace:
            head = GraceHead(self.config.dim, self.config.tau, seed=derive_seed(self.seed, "head"))
        modules = {f"gcl/{self.node_type}/encoder": encoder, "fusion": self.fusion}
        if head is not None:
            modules[f"gcl/{self.node_type}/head"] = head
        params = ParamStore.from_modules(modules)

        curve: List[Tuple[int, float]] = []
        best_loss = None
        skip = identity_fallback and self.method == GclMethod.ggd
        if skip:
            bt.logging.warning(f"pretrain({self.node_type}): edge reconstruction has no edges, skipping optimization")
        elif len(params):
            best_loss = self.train(encoder, head, params, curve)

        with torch.no_grad():
            z = encoder(plain_view(self.subgraph, self.features()))
        return GclJobResult(
            node_type=self.node_type,
            table=self.export(z),
            fusion=self.fusion,
            encoder=encoder,
            head=head,
            params=params,
            curve=curve,
            best_loss=best_loss,
            identity_fallback=identity_fallback,
        )

    def train(self, encoder: GcnEncoder, head, params: ParamStore, curve: List[Tuple[int, float]]) -> float:
        total = self.optim.epochs
        optim = fit_warmup(self.optim, total)
        rng = np.random.default_rng(derive_seed(self.seed, "steps"))
        best_loss, best_snapshot, bad_epochs = float("inf"), None, 0
        for step in range(total):
            start_time = time.time()
            lr = schedule_lr(step, optim, total)
            params.zero_grad()
            loss, jsd = forward_backward(lambda: self.loss(encoder, head, rng), params)
            loss = float(loss)
            curve.append((step, loss))
            best_flag = loss < best_loss
            if best_flag:
                best_loss, best_snapshot, bad_epochs = loss, params.snapshot(), 0
            elif step >= optim.warmup_steps:
                bad_epochs += 1
            factor = clip_gradients(params, optim.max_grad_norm)
            adam_step(params, optim, lr)
            self.events(
                TrainingEvent(
                    stage="pretrain",
                    epoch=step,
                    train_loss=loss,
                    lr=lr,
                    best_flag=best_flag,
                    node_type=self.node_type,
                    clip_factor=factor,
                    jsd=float(jsd),
                    step_length=time.time() - start_time,
                )
            )
            if bad_epochs and bad_epochs >= optim.patience:
                bt.logging.info(f"pretrain({self.node_type}): loss plateau, stopping at step {step}")
                break
        params.restore(best_snapshot)
        bt.logging.success(
            prefix=f"Pretrained {self.node_type}",
            sufix=f"<blue>best loss {best_loss:.6f} after {len(curve)} step(s)</blue>",
        )
        return best_loss


def pretrain(
    graph: KnowledgeGraph,
    stack: torch.Tensor,
    fusion: BaseFusionModel,
    config: GclConfig,
    optim: OptimConfig,
    seed: int,
    events: Optional[EventLogger] = None,
) -> Dict[str, GclJobResult]:
    """Pretrains one encoder per node type on its homogeneous subgraph, concurrently.

    ``stack`` is the (n, M, d) modality stack of the whole graph. Every job trains its
    own copy of ``fusion`` jointly with its encoder. Returns results keyed by node type;
    each carries the z table (rows keyed by parent node id) and the loss curve.
    """
    events = events or EventLogger()
    jobs = [
        _PretrainJob(graph, node_type, stack, copy.deepcopy(fusion), config, optim, seed, events)
        for node_type in graph.node_types
    ]
    workers = thread_limit(len(jobs))
    bt.logging.info(f"pretrain(): {len(jobs)} node type(s) on {workers} thread(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job.run) for job in jobs]
        results = [future.result() for future in futures]
    return {result.node_type: result for result in results}

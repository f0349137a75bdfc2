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

import os
import time
import argparse
import torch
import bittensor as bt
from dataclasses import dataclass, field
from typing import List, Optional
from kgforge.errors import ConfigurationError
from kgforge.event import EventLogger, TrainingEvent
from kgforge.graph.sampling import NegativeSampler
from kgforge.graph.split import EdgeSplit
from kgforge.graph.store import KnowledgeGraph, restrict_triples
from kgforge.kge.distmult import RelationEmbedding
from kgforge.kge.loss import bce_loss, kge_loss
from kgforge.kge.model import FeatureSource, KgeModel, as_triple_tensor
from kgforge.kge.rgcn import Rgcn
from kgforge.kge.saint import graphsaint_sample, induced_triples
from kgforge.numerics import (
    OptimConfig,
    adam_step,
    apply_checkpoint,
    clip_gradients,
    fit_warmup,
    forward_backward,
    load_checkpoint,
    make_generator,
    save_checkpoint,
    schedule_lr,
)
from kgforge.utils import derive_seed, read_csv, write_csv

LOG_HEADER = ["epoch", "train_loss", "valid_loss", "lr", "best_flag"]
LAST_CHECKPOINT = "kge_last.ckpt"
BEST_CHECKPOINT = "kge_best.ckpt"
LOG_FILE = "kge_log.csv"


@dataclass(frozen=True)
class KgeConfig:
    """Link-prediction defaults.
    Note: ``alpha`` and the optimizer's ``reg_weight`` only act through their product.
    """

    feature_source: str = FeatureSource.fused.value
    freeze_features: bool = True
    hidden_dim: int = 128
    dim: int = 128
    neg_ratio: int = 1
    alpha: float = 1.0
    walk_length: int = 10
    num_steps: int = 1000

    def __post_init__(self):
        if self.feature_source not in {s.value for s in FeatureSource}:
            raise ConfigurationError(f"unknown feature source {self.feature_source!r}", key="kge.features")
        if self.neg_ratio < 1:
            raise ConfigurationError(f"negative ratio must be >= 1, got {self.neg_ratio}", key="kge.neg_ratio")
        if self.walk_length < 1 or self.num_steps < 1:
            raise ConfigurationError("walk length and steps per epoch must be >= 1", key="kge.walk_length")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}", key="kge.alpha")

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser):
        parser.add_argument(
            "--kge.features",
            type=str,
            choices=[s.value for s in FeatureSource],
            default=cls.feature_source,
            help="Node features fed to the RGCN: fused modality vectors or contrastively pretrained z tables.",
        )
        parser.add_argument(
            "--kge.freeze_features",
            "--freeze-features",
            action=argparse.BooleanOptionalAction,
            default=cls.freeze_features,
            help="Keep pretrained z tables fixed during link-prediction training.",
        )
        parser.add_argument(
            "--kge.neg_ratio",
            "--neg-ratio",
            type=int,
            default=cls.neg_ratio,
            help="Corrupted triples per positive triple.",
        )
        parser.add_argument("--kge.alpha", type=float, default=cls.alpha, help="Weight of the regularization term.")
        parser.add_argument(
            "--kge.walk_length", type=int, default=cls.walk_length, help="Length of each GraphSAINT random walk."
        )
        parser.add_argument(
            "--kge.num_steps", type=int, default=cls.num_steps, help="GraphSAINT batches per epoch."
        )

    @classmethod
    def from_config(cls, config: "bt.Config") -> "KgeConfig":
        return cls(
            feature_source=config.kge.features,
            freeze_features=config.kge.freeze_features,
            hidden_dim=config.model.hidden_dim,
            dim=config.model.dim,
            neg_ratio=config.kge.neg_ratio,
            alpha=config.kge.alpha,
            walk_length=config.kge.walk_length,
            num_steps=config.kge.num_steps,
        )


@dataclass
class LogRow:
    epoch: int
    train_loss: float
    valid_loss: float
    lr: float
    best_flag: bool

    def as_row(self):
        return [self.epoch, repr(self.train_loss), repr(self.valid_loss), repr(self.lr), int(self.best_flag)]


@dataclass
class KgeTrainResult:
    model: KgeModel
    log: List[LogRow] = field(default_factory=list)
    best_epoch: int = -1
    best_valid: float = float("inf")

    @property
    def rgcn(self) -> Rgcn:
        return self.model.rgcn

    @property
    def relations(self) -> RelationEmbedding:
        return self.model.relations


def build_kge_model(
    graph: KnowledgeGraph,
    split: EdgeSplit,
    features: torch.nn.Module,
    config: KgeConfig,
    dropout: float,
    seed: int,
) -> KgeModel:
    """Fresh model whose messages travel along the training triples only."""
    rgcn = Rgcn(
        graph.num_relations,
        features.dim,
        config.hidden_dim,
        config.dim,
        dropout=dropout,
        seed=derive_seed(seed, "rgcn"),
    )
    relations = RelationEmbedding(graph.num_relations, config.dim, seed=derive_seed(seed, "distmult"))
    model = KgeModel(features, rgcn, relations, restrict_triples(graph, split.train))
    bt.logging.debug(f"build_kge_model(): {model.store(trainable_only=False).num_parameters()} parameters")
    return model


def write_log(path: str, log: List[LogRow]) -> str:
    return write_csv(path, LOG_HEADER, (row.as_row() for row in log))


def read_log(path: str) -> List[LogRow]:
    return [
        LogRow(
            epoch=int(row["epoch"]),
            train_loss=float(row["train_loss"]),
            valid_loss=float(row["valid_loss"]),
            lr=float(row["lr"]),
            best_flag=bool(int(row["best_flag"])),
        )
        for row in read_csv(path)
    ]


def validation_loss(model: KgeModel, positives: torch.LongTensor, negatives: torch.LongTensor) -> float:
    """BCE over held-out positives and fixed negatives, full-graph encoding, eval mode."""
    with torch.no_grad():
        X, index = model.encode(torch.arange(model.message_graph.num_nodes))
        return float(bce_loss(model.logits(X, index, positives), model.logits(X, index, negatives)))


def train_kge(
    graph: KnowledgeGraph,
    split: EdgeSplit,
    model: KgeModel,
    config: KgeConfig,
    optim: OptimConfig,
    seed: int,
    events: Optional[EventLogger] = None,
    out_dir: Optional[str] = None,
    resume: bool = False,
) -> KgeTrainResult:
    """Trains ``model`` on ``split.train`` with GraphSAINT batches and early stopping.

    Every epoch draws ``num_steps`` random-walk batches from the training graph, scores
    induced positives against fresh filtered negatives, and takes one Adam step per
    batch. The validation loss uses negatives fixed by ``seed``. The parameters with the
    lowest validation loss are restored at the end. With ``out_dir`` the log, the best
    parameters and a resumable last-epoch checkpoint are written there every epoch.
    """
    if not split.valid:
        raise ConfigurationError("validation split is empty", key="split.ratios")
    events = events or EventLogger()
    train_graph = model.message_graph
    sampler = NegativeSampler(graph)
    params = model.store()
    total_steps = optim.epochs * config.num_steps
    optim = fit_warmup(optim, total_steps)

    valid_positives = as_triple_tensor([graph.triples[i] for i in split.valid])
    valid_negatives = as_triple_tensor(
        sampler.sample([graph.triples[i] for i in split.valid], config.neg_ratio, derive_seed(seed, "valid"))
    )

    result = KgeTrainResult(model=model)
    best_snapshot = None
    bad_epochs = 0
    start_epoch = 0
    if resume and out_dir and os.path.exists(os.path.join(out_dir, LAST_CHECKPOINT)):
        meta = apply_checkpoint(load_checkpoint(os.path.join(out_dir, LAST_CHECKPOINT)), params)
        start_epoch = int(meta["epoch"]) + 1
        bad_epochs = int(meta["bad_epochs"])
        result.best_epoch = int(meta["best_epoch"])
        result.best_valid = meta["best_valid"]
        result.log = read_log(os.path.join(out_dir, LOG_FILE))[:start_epoch]
        best_entries = load_checkpoint(os.path.join(out_dir, BEST_CHECKPOINT))
        best_snapshot = {name: best_entries[name] for name in params}
        bt.logging.info(f"train_kge(): resuming at epoch {start_epoch}, best epoch {result.best_epoch}")
        if bad_epochs and bad_epochs >= optim.patience:
            start_epoch = optim.epochs

    for epoch in range(start_epoch, optim.epochs):
        start_time = time.time()
        epoch_seed = derive_seed(seed, "epoch", epoch)
        losses, factors, lr = [], [], 0.0
        for batch_index in range(config.num_steps):
            batch = graphsaint_sample(train_graph, optim.batch_size, config.walk_length, derive_seed(epoch_seed, batch_index))
            if not len(batch.triples):
                continue
            positives = [tuple(triple) for triple in batch.triples.tolist()]
            negatives = as_triple_tensor(
                sampler.sample(positives, config.neg_ratio, derive_seed(epoch_seed, batch_index, "negatives"))
            )
            nodes = torch.unique(torch.cat([batch.nodes, negatives[:, 0], negatives[:, 2]]))
            messages = induced_triples(train_graph, nodes.tolist())
            generator = make_generator(derive_seed(epoch_seed, batch_index, "dropout"))

            def loss_fn():
                X, index = model.encode(nodes, messages, training=True, generator=generator)
                return kge_loss(
                    model.logits(X, index, batch.triples),
                    model.logits(X, index, negatives),
                    X,
                    model.relations.Z,
                    optim.reg_weight,
                    config.alpha,
                )

            lr = schedule_lr(params.step, optim, total_steps)
            params.zero_grad()
            (loss,) = forward_backward(loss_fn, params)
            factors.append(clip_gradients(params, optim.max_grad_norm))
            adam_step(params, optim, lr)
            losses.append(float(loss))
            bt.logging.trace(f"epoch {epoch} batch {batch_index}: loss {float(loss):.6f} lr {lr:.3e}")

        if not losses:
            bt.logging.warning(f"train_kge(): epoch {epoch} drew no batch with training triples")
        train_loss = sum(losses) / len(losses) if losses else float("nan")
        valid_loss = validation_loss(model, valid_positives, valid_negatives)
        best_flag = valid_loss < result.best_valid
        if best_flag:
            result.best_valid, result.best_epoch, bad_epochs = valid_loss, epoch, 0
            best_snapshot = params.snapshot()
        else:
            bad_epochs += 1
        result.log.append(LogRow(epoch, train_loss, valid_loss, lr, best_flag))

        events(
            TrainingEvent(
                stage="train",
                epoch=epoch,
                train_loss=train_loss,
                valid_loss=valid_loss,
                lr=lr,
                best_flag=best_flag,
                num_batches=len(losses),
                clip_factor=min(factors) if factors else None,
                step_length=time.time() - start_time,
            )
        )
        bt.logging.info(
            f"epoch {epoch}: train {train_loss:.6f} valid {valid_loss:.6f} lr {lr:.3e}"
            + (" (best)" if best_flag else "")
        )

        if out_dir:
            write_log(os.path.join(out_dir, LOG_FILE), result.log)
            if best_flag:
                save_checkpoint(os.path.join(out_dir, BEST_CHECKPOINT), params)
            save_checkpoint(
                os.path.join(out_dir, LAST_CHECKPOINT),
                params,
                meta={
                    "epoch": epoch,
                    "bad_epochs": bad_epochs,
                    "best_epoch": result.best_epoch,
                    "best_valid": result.best_valid,
                },
            )

        if bad_epochs and bad_epochs >= optim.patience:
            bt.logging.info(f"train_kge(): no improvement for {bad_epochs} epoch(s), stopping")
            break

    if best_snapshot is not None:
        params.restore(best_snapshot)
    bt.logging.success(
        prefix="Trained link predictor",
        sufix=f"<blue>best epoch {result.best_epoch}, valid loss {result.best_valid:.6f}</blue>",
    )
    return result

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
import torch
import bittensor as bt
from typing import Dict, List, Tuple
from kgforge.cli.manifest import RunManifest, config_snapshot
from kgforge.errors import ConfigurationError
from kgforge.eval.report import EvalConfig, evaluate, write_per_relation_csv
from kgforge.event import EventLogger
from kgforge.fusion.base import BaseFusionModel
from kgforge.fusion.config import DefaultFusionConfig
from kgforge.fusion.factory import build_fusion
from kgforge.gcl.pretrain import GclConfig, pretrain, write_curve
from kgforge.graph.split import EdgeSplit, read_split, split_edges, write_split
from kgforge.graph.store import KnowledgeGraph, load_graph, restrict_triples, save_graph
from kgforge.graph.synthetic import synthetic_graph
from kgforge.kge.model import FeatureSource, FusedFeatures, KgeModel, TableFeatures
from kgforge.kge.train import BEST_CHECKPOINT, LAST_CHECKPOINT, LOG_FILE, KgeConfig, build_kge_model, train_kge
from kgforge.modality.mock import mock_provider
from kgforge.modality.table import MODALITY_ORDER, EmbeddingTable, load_table, save_table
from kgforge.modality.view import modality_stack
from kgforge.numerics import OptimConfig, apply_checkpoint, load_checkpoint, save_checkpoint
from kgforge.utils import derive_seed

EXPORT_MODALITY = "kge"


def type_slug(node_type: str) -> str:
    return node_type.replace("/", "_").replace(" ", "_")


def split_path(config: "bt.Config") -> str:
    return config.split.path or os.path.join(config.out, "split.tsv")


def z_table_path(directory: str, node_type: str) -> str:
    return os.path.join(directory, f"z_{type_slug(node_type)}.kge")


def checkpoint_path(config: "bt.Config") -> str:
    return config.checkpoint or os.path.join(config.out, BEST_CHECKPOINT)


def new_manifest(config: "bt.Config", command: str) -> RunManifest:
    return RunManifest(command=command, config=config_snapshot(config), seeds={"seed": config.seed})


def load_inputs(config: "bt.Config") -> KnowledgeGraph:
    return load_graph(config.graph.nodes, config.graph.triples)


def embedding_paths(config: "bt.Config") -> List[str]:
    if config.embeddings.mock:
        return []
    return [config.embeddings[modality] for modality in MODALITY_ORDER if config.embeddings[modality]]


def load_modalities(config: "bt.Config", graph: KnowledgeGraph) -> Dict[str, EmbeddingTable]:
    if config.embeddings.mock:
        return mock_provider(graph, derive_seed(config.seed, "mock"), config.embeddings.dim)
    tables = {
        modality: load_table(config.embeddings[modality], modality, graph.num_nodes)
        for modality in MODALITY_ORDER
        if config.embeddings[modality]
    }
    if not tables:
        raise ConfigurationError(
            "no embedding table configured; pass --embeddings.<modality> or --embeddings.mock",
            key="embeddings.mock",
        )
    return tables


def fused_inputs(config: "bt.Config", graph: KnowledgeGraph) -> Tuple[torch.Tensor, BaseFusionModel]:
    """(n, M, D) modality stack of every node plus a freshly seeded fusion model."""
    stack, _ = modality_stack(graph.num_nodes, load_modalities(config, graph), derive_seed(config.seed, "fill"))
    fusion = build_fusion(
        DefaultFusionConfig.from_config(config),
        num_modalities=stack.shape[1],
        in_dim=stack.shape[2],
        num_types=len(graph.node_types),
        num_nodes=graph.num_nodes,
        seed=derive_seed(config.seed, "fusion"),
    )
    return stack, fusion


def assemble_model(config: "bt.Config", graph: KnowledgeGraph, split: EdgeSplit) -> Tuple[KgeModel, List[str]]:
    """Builds the link predictor ``config`` describes. Returns it with the feature files it read."""
    kge = KgeConfig.from_config(config)
    optim = OptimConfig.from_config(config)
    if kge.feature_source == FeatureSource.fused.value:
        stack, fusion = fused_inputs(config, graph)
        features = FusedFeatures(stack, fusion, graph.node_type_ids)
        inputs = embedding_paths(config)
    else:
        directory = config.features.dir or config.out
        inputs = [z_table_path(directory, node_type) for node_type in graph.node_types]
        tables = [load_table(path, num_nodes=graph.num_nodes) for path in inputs]
        features = TableFeatures.from_tables(tables, graph.num_nodes, trainable=not kge.freeze_features)
    model = build_kge_model(graph, split, features, kge, optim.dropout, derive_seed(config.seed, "kge"))
    return model, inputs


def load_trained_model(config: "bt.Config", manifest: RunManifest) -> Tuple[KnowledgeGraph, EdgeSplit, KgeModel]:
    graph = load_inputs(config)
    split = read_split(split_path(config))
    model, inputs = assemble_model(config, graph, split)
    path = checkpoint_path(config)
    apply_checkpoint(load_checkpoint(path), model.store())
    manifest.add_inputs([config.graph.nodes, config.graph.triples, split_path(config), path, *inputs])
    return graph, split, model


def cmd_synth(config: "bt.Config", events: EventLogger) -> RunManifest:
    """Writes a synthetic graph and its attribute tables into ``--out``."""
    manifest = new_manifest(config, "synth")
    graph, tables = synthetic_graph(
        num_nodes=config.synth.num_nodes,
        num_relations=config.synth.num_relations,
        num_communities=config.synth.num_communities,
        p_in=config.synth.p_in,
        p_out=config.synth.p_out,
        dim=config.embeddings.dim,
        noise=config.synth.noise,
        missing=config.synth.missing,
        seed=config.seed,
    )
    nodes_path = os.path.join(config.out, "nodes.tsv")
    triples_path = os.path.join(config.out, "triples.tsv")
    save_graph(graph, nodes_path, triples_path)
    paths = [nodes_path, triples_path]
    for modality, table in tables.items():
        paths.append(save_table(table, os.path.join(config.out, f"emb_{modality}.kge")))
    manifest.add_artifacts(paths)
    manifest.write()
    return manifest


def cmd_split(config: "bt.Config", events: EventLogger) -> RunManifest:
    manifest = new_manifest(config, "split")
    graph = load_inputs(config)
    split = split_edges(graph, config.split.ratios, config.seed)
    manifest.add_inputs([config.graph.nodes, config.graph.triples])
    manifest.add_artifacts([write_split(split, split_path(config))])
    manifest.write()
    return manifest


def cmd_pretrain(config: "bt.Config", events: EventLogger) -> RunManifest:
    """Contrastive pretraining per node type; writes z tables, encoder checkpoints and curves.

    Only the training triples are visible when a split file exists.
    """
    manifest = new_manifest(config, "pretrain")
    graph = load_inputs(config)
    inputs = [config.graph.nodes, config.graph.triples]
    if os.path.exists(split_path(config)):
        graph = restrict_triples(graph, read_split(split_path(config)).train)
        inputs.append(split_path(config))
    else:
        bt.logging.warning(f"No split at {split_path(config)}; pretraining sees every triple")
    stack, fusion = fused_inputs(config, graph)
    manifest.seeds["pretrain"] = derive_seed(config.seed, "pretrain")
    results = pretrain(
        graph,
        stack,
        fusion,
        GclConfig.from_config(config),
        OptimConfig.from_config(config),
        manifest.seeds["pretrain"],
        events,
    )

    artifacts = []
    for node_type in sorted(results):
        result = results[node_type]
        slug = type_slug(node_type)
        artifacts.append(save_table(result.table, z_table_path(config.out, node_type)))
        artifacts.append(write_curve(os.path.join(config.out, f"gcl_curve_{slug}.csv"), result.curve))
        if len(result.params):
            artifacts.append(save_checkpoint(os.path.join(config.out, f"gcl_{slug}.ckpt"), result.params))
    manifest.add_inputs(inputs + embedding_paths(config))
    manifest.add_artifacts(artifacts)
    manifest.write()
    return manifest


def cmd_train(config: "bt.Config", events: EventLogger) -> RunManifest:
    manifest = new_manifest(config, "train")
    graph = load_inputs(config)
    split = read_split(split_path(config))
    model, inputs = assemble_model(config, graph, split)
    manifest.seeds["train"] = derive_seed(config.seed, "train")
    result = train_kge(
        graph,
        split,
        model,
        KgeConfig.from_config(config),
        OptimConfig.from_config(config),
        manifest.seeds["train"],
        events=events,
        out_dir=config.out,
        resume=config.resume,
    )
    manifest.add_inputs([config.graph.nodes, config.graph.triples, split_path(config), *inputs])
    manifest.add_artifacts(
        os.path.join(config.out, name) for name in (BEST_CHECKPOINT, LAST_CHECKPOINT, LOG_FILE)
    )
    bt.logging.info(f"cmd_train(): best epoch {result.best_epoch}, valid loss {result.best_valid:.6f}")
    manifest.write()
    return manifest


def cmd_eval(config: "bt.Config", events: EventLogger) -> RunManifest:
    """One report and one per-relation table per negative ratio."""
    manifest = new_manifest(config, "eval")
    graph, split, model = load_trained_model(config, manifest)
    eval_config = EvalConfig.from_config(config)
    manifest.seeds["eval"] = eval_config.seed
    artifacts = []
    for ratio in eval_config.ratios:
        report = evaluate(
            model,
            graph,
            split,
            part=eval_config.split,
            ratio=ratio,
            seed=eval_config.seed,
            threshold=eval_config.threshold,
            threshold_mode=eval_config.threshold_mode,
        )
        stem = os.path.join(config.out, f"eval_{eval_config.split}_1to{ratio}")
        artifacts.append(report.save(stem + ".txt"))
        artifacts.append(write_per_relation_csv(report, stem + "_relations.csv"))
    manifest.add_artifacts(artifacts)
    manifest.write()
    return manifest


def cmd_export(config: "bt.Config", events: EventLogger) -> RunManifest:
    """Writes latent RGCN embeddings of the requested nodes (all by default)."""
    manifest = new_manifest(config, "export")
    graph, _, model = load_trained_model(config, manifest)
    nodes = list(config.export.nodes) if config.export.nodes else list(range(graph.num_nodes))
    unknown = sorted({node for node in nodes if not 0 <= node < graph.num_nodes})
    if unknown:
        raise ConfigurationError(f"unknown node id(s) {unknown}", key="export.nodes")
    with torch.no_grad():
        X, index = model.encode(torch.arange(graph.num_nodes))
    rows = {node: X[index[node]].clone() for node in sorted(set(nodes))}
    table = EmbeddingTable(modality=EXPORT_MODALITY, dim=X.shape[1], rows=rows)
    name = "embeddings.kge" if config.export.binary else "embeddings.tsv"
    manifest.add_artifacts([save_table(table, os.path.join(config.out, name), binary=config.export.binary)])
    manifest.write()
    return manifest


COMMAND_TABLE = {
    "synth": cmd_synth,
    "split": cmd_split,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "eval": cmd_eval,
    "export": cmd_export,
}

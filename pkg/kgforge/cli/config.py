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
import argparse
import bittensor as bt
from loguru import logger
from typing import List, Optional, Tuple
from kgforge.errors import ConfigurationError
from kgforge.eval.report import EvalConfig
from kgforge.fusion.base import BaseFusionModel
from kgforge.gcl.pretrain import GclConfig
from kgforge.kge.train import KgeConfig
from kgforge.modality.table import MODALITY_ORDER
from kgforge.numerics.optim import OptimConfig

COMMANDS = ("synth", "split", "pretrain", "train", "eval", "export")
# Commands that read the graph TSVs.
GRAPH_COMMANDS = ("split", "pretrain", "train", "eval", "export")


def check_config(config: "bt.Config", command: str) -> Optional[int]:
    r"""Checks/validates the config namespace object and prepares the output directory.

    Returns the id of the loguru events sink, or None when events are not saved.
    """
    bt.logging.check_config(config)

    config.out = os.path.expanduser(config.out)
    if not os.path.exists(config.out):
        os.makedirs(config.out, exist_ok=True)

    if command in GRAPH_COMMANDS:
        for key in ("nodes", "triples"):
            path = config.graph[key]
            if not path:
                raise ConfigurationError(f"graph.{key} is required by '{command}'", key=f"graph.{key}")
            if not os.path.exists(path):
                raise ConfigurationError(f"graph.{key} does not exist: {path}", key=f"graph.{key}")
    for modality in MODALITY_ORDER:
        path = config.embeddings[modality]
        if path and not os.path.exists(path):
            raise ConfigurationError(f"embeddings.{modality} does not exist: {path}", key=f"embeddings.{modality}")
    if config.model.dim < 1 or config.model.hidden_dim < 1:
        raise ConfigurationError(f"embedding dimensions must be positive, got {config.model.dim}", key="model.dim")
    if config.embeddings.dim < 1:
        raise ConfigurationError(f"mock dimension must be positive, got {config.embeddings.dim}", key="embeddings.dim")

    if config.logging.dont_save_events:
        return None
    # Add custom event logger for the training events.
    try:
        logger.level("EVENTS")
    except ValueError:
        logger.level("EVENTS", no=38, icon="📝")
    return logger.add(
        os.path.join(config.out, "events.log"),
        rotation=config.logging.events_retention_size,
        serialize=True,
        enqueue=True,
        backtrace=False,
        diagnose=False,
        level="EVENTS",
        format="{time:YYYY-MM-DD at HH:mm:ss} | {level} | {message}",
    )


def add_args(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, help="Root seed every stage derives its streams from.", default=0)
    parser.add_argument(
        "--out", type=str, help="Directory all artifacts and manifests are written to.", default="kgforge_out"
    )
    parser.add_argument("--resume", action="store_true", help="Resume training from kge_last.ckpt.", default=False)

    parser.add_argument("--graph.nodes", type=str, help="Node TSV.", default=None)
    parser.add_argument("--graph.triples", type=str, help="Triple TSV.", default=None)

    parser.add_argument(
        "--split.path", type=str, help="Split file (defaults to <out>/split.tsv).", default=None
    )
    parser.add_argument(
        "--split.ratios",
        type=float,
        nargs=3,
        help="Train/valid/test fractions of the triples.",
        default=[0.6, 0.2, 0.2],
    )

    for modality in MODALITY_ORDER:
        parser.add_argument(
            f"--embeddings.{modality}",
            type=str,
            help=f"Embedding table (TSV or binary) of the {modality} modality.",
            default=None,
        )
    parser.add_argument(
        "--embeddings.mock",
        action="store_true",
        help="Use seeded random unit vectors instead of embedding files.",
        default=False,
    )
    parser.add_argument(
        "--embeddings.dim", type=int, help="Dimension of mock embeddings.", default=64
    )

    parser.add_argument(
        "--model.dim", "--dim", type=int, help="Latent embedding dimension.", default=KgeConfig.dim
    )
    parser.add_argument(
        "--model.hidden_dim", type=int, help="Hidden dimension of the encoders.", default=KgeConfig.hidden_dim
    )
    parser.add_argument(
        "--features.dir",
        type=str,
        help="Directory holding the pretrained z tables (defaults to --out).",
        default=None,
    )

    parser.add_argument(
        "--checkpoint", type=str, help="KGE checkpoint to evaluate or export (defaults to <out>/kge_best.ckpt).", default=None
    )
    parser.add_argument(
        "--export.nodes", type=int, nargs="*", help="Node ids to export (default: every node).", default=None
    )
    parser.add_argument(
        "--export.binary",
        action=argparse.BooleanOptionalAction,
        help="Write the binary table format instead of TSV.",
        default=True,
    )

    parser.add_argument("--synth.num_nodes", type=int, help="Synthetic graph size.", default=300)
    parser.add_argument("--synth.num_relations", type=int, help="Synthetic relation types.", default=3)
    parser.add_argument("--synth.num_communities", type=int, help="Latent communities.", default=4)
    parser.add_argument("--synth.p_in", type=float, help="Edge probability inside a community.", default=0.3)
    parser.add_argument("--synth.p_out", type=float, help="Edge probability across communities.", default=0.01)
    parser.add_argument("--synth.noise", type=float, help="Attribute noise scale.", default=0.5)
    parser.add_argument("--synth.missing", type=float, help="Fraction of attribute rows dropped.", default=0.0)

    parser.add_argument(
        "--logging.dont_save_events",
        action="store_true",
        help="If set, we dont save events to a log file.",
        default=False,
    )
    parser.add_argument(
        "--logging.events_retention_size", type=str, help="Events retention size.", default="2 GB"
    )

    parser.add_argument("--wandb.on", action="store_true", help="Turn on wandb.", default=False)
    parser.add_argument(
        "--wandb.project_name",
        type=str,
        help="The name of the project where you are sending the new run.",
        default="kgforge",
    )
    parser.add_argument(
        "--wandb.entity",
        type=str,
        help="An entity is a username or team name where youre sending runs.",
        default=None,
    )
    parser.add_argument("--wandb.offline", action="store_true", help="Runs wandb in offline mode.", default=False)
    parser.add_argument("--wandb.notes", type=str, help="Notes to add to the wandb run.", default="")


def build_parser(command: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=f"kgforge {command}")
    bt.logging.add_args(parser)
    BaseFusionModel.add_args(parser)
    GclConfig.add_args(parser)
    KgeConfig.add_args(parser)
    EvalConfig.add_args(parser)
    OptimConfig.add_args(parser)
    add_args(parser)
    return parser


def _parse_value(action: argparse.Action, key: str, raw: str):
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction, argparse.BooleanOptionalAction)):
        lowered = raw.lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigurationError(f"{key} expects true or false, got {raw!r}", key=key)
        return lowered in ("true", "1", "yes")
    convert = action.type or str
    try:
        if action.nargs in ("+", "*") or isinstance(action.nargs, int):
            values = [convert(item) for item in raw.replace(",", " ").split()]
            if isinstance(action.nargs, int) and len(values) != action.nargs:
                raise ConfigurationError(f"{key} expects {action.nargs} values, got {len(values)}", key=key)
            value = values
        else:
            value = convert(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r}", key=key)
    if action.choices is not None:
        for item in value if isinstance(value, list) else [value]:
            if item not in action.choices:
                raise ConfigurationError(f"{key} must be one of {list(action.choices)}, got {item!r}", key=key)
    return value


def load_config_file(path: str, parser: argparse.ArgumentParser):
    """Applies a ``key = value`` file as parser defaults; command-line flags still win.

    Keys are option names without the leading dashes (``optim.learning_rate``, ``fusion``).
    Blank lines and ``#`` comments are skipped. Unknown keys are errors.
    """
    if not os.path.exists(path):
        raise ConfigurationError(f"config file does not exist: {path}", key="config")
    defaults = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep or not key:
                raise ConfigurationError(f"{path}:{line_number}: expected 'key = value', got {line!r}", key="config")
            action = parser._option_string_actions.get(f"--{key}")
            if action is None:
                raise ConfigurationError(f"{path}:{line_number}: unknown config key {key!r}", key=key)
            defaults[action.dest] = _parse_value(action, key, raw)
    parser.set_defaults(**defaults)
    bt.logging.debug(f"Loaded {len(defaults)} config value(s) from {path}")


def _pop_config_path(argv: List[str]) -> Tuple[Optional[str], List[str]]:
    rest, path = [], None
    iterator = iter(argv)
    for arg in iterator:
        if arg == "--config":
            path = next(iterator, None)
            if path is None:
                raise ConfigurationError("--config expects a path", key="config")
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
        else:
            rest.append(arg)
    return path, rest


def build_config(command: str, argv: List[str]) -> "bt.Config":
    """Parses ``argv`` (after the command name) on top of the optional ``--config`` file."""
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}, expected one of {list(COMMANDS)}", key="command")
    parser = build_parser(command)
    config_path, argv = _pop_config_path(argv)
    if config_path:
        load_config_file(config_path, parser)
    config = bt.config(parser, args=argv, strict=True)
    config.command = command
    config.config_file = config_path
    return config

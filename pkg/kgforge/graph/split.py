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

import numpy as np
import bittensor as bt
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple
from kgforge.errors import ConfigurationError, LoadError
from kgforge.graph.store import KnowledgeGraph

PARTS = ("train", "valid", "test")


@dataclass
class EdgeSplit:
    train: List[int]
    valid: List[int]
    test: List[int]
    seed: int
    ratios: Tuple[float, float, float]

    def part(self, name: str) -> List[int]:
        if name not in PARTS:
            raise ConfigurationError(f"unknown split part {name!r}", key="eval.split")
        return getattr(self, name)

    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train), len(self.valid), len(self.test)


def split_sizes(total: int, ratios: Sequence[float] = (0.6, 0.2, 0.2)) -> Tuple[int, int, int]:
    """Train and valid sizes are rounded; test takes the remainder."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ConfigurationError(
            f"split ratios must be three positive fractions, got {ratios}", key="split.ratios"
        )
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigurationError(
            f"split ratios must sum to 1, got {sum(ratios)}", key="split.ratios"
        )
    n_train = int(round(ratios[0] * total))
    n_valid = min(int(round(ratios[1] * total)), total - n_train)
    return n_train, n_valid, total - n_train - n_valid


def split_edges(
    graph: KnowledgeGraph, ratios: Sequence[float] = (0.6, 0.2, 0.2), seed: int = 0
) -> EdgeSplit:
    """Uniform random permutation of triple indices under ``seed``, cut by ``ratios``."""
    total = graph.num_triples
    n_train, n_valid, _ = split_sizes(total, ratios)
    ratios = tuple(float(r) for r in ratios)
    order = np.random.default_rng(seed).permutation(total).tolist()
    split = EdgeSplit(
        train=sorted(order[:n_train]),
        valid=sorted(order[n_train : n_train + n_valid]),
        test=sorted(order[n_train + n_valid :]),
        seed=seed,
        ratios=ratios,
    )
    bt.logging.info(f"split_edges(): train/valid/test = {split.sizes()}")
    return split


def write_split(split: EdgeSplit, path: str) -> str:
    labels: Dict[int, str] = {}
    for name in PARTS:
        for index in split.part(name):
            labels[index] = name
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# seed = {split.seed}\n")
        f.write(f"# ratios = {','.join(repr(r) for r in split.ratios)}\n")
        for index in sorted(labels):
            f.write(f"{index}\t{labels[index]}\n")
    bt.logging.success(prefix="Saved split", sufix=f"<blue>{path}</blue>")
    return path


def read_split(path: str) -> EdgeSplit:
    parts: Dict[str, List[int]] = {name: [] for name in PARTS}
    seed, ratios = 0, (0.6, 0.2, 0.2)
    try:
        f = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise LoadError("split file not found", path=path)
    with f:
        for line_number, line in enumerate(f.read().splitlines(), start=1):
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                key, value = key.strip(), value.strip()
                if key == "seed":
                    seed = int(value)
                elif key == "ratios":
                    ratios = tuple(float(v) for v in value.split(","))
                continue
            row = line.split("\t")
            if len(row) != 2 or row[1] not in parts:
                raise LoadError(f"malformed split row {line!r}", path=path, line=line_number)
            try:
                parts[row[1]].append(int(row[0]))
            except ValueError:
                raise LoadError(f"triple index {row[0]!r} is not an integer", path=path, line=line_number)
    return EdgeSplit(seed=seed, ratios=ratios, **{name: sorted(v) for name, v in parts.items()})

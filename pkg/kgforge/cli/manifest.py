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
import json
import time
import numpy as np
import torch
import networkx
import bittensor as bt
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Optional
import kgforge
from kgforge.errors import ContractViolation
from kgforge.utils import file_sha256


def config_snapshot(config: Any) -> Any:
    """Plain-data copy of a bt.Config, dropping bittensor bookkeeping keys."""
    if isinstance(config, dict):
        return {
            str(key): config_snapshot(value)
            for key, value in config.items()
            if not str(key).startswith("__")
        }
    if isinstance(config, (list, tuple)):
        return [config_snapshot(value) for value in config]
    return config


def versions() -> Dict[str, str]:
    return {
        "kgforge": kgforge.__version__,
        "torch": torch.__version__,
        "numpy": np.__version__,
        "networkx": networkx.__version__,
        "bittensor": bt.__version__,
    }


@dataclass
class RunManifest:
    """What a command read, what it wrote, and with which settings.

    Hashes are SHA-256 of the files as they exist when the manifest is written.
    """

    command: str
    config: Dict[str, Any]
    seeds: Dict[str, int]
    versions: Dict[str, str] = field(default_factory=versions)
    inputs: Dict[str, str] = field(default_factory=dict)
    artifacts: Dict[str, str] = field(default_factory=dict)
    started: float = field(default_factory=time.time)
    wall_clock: Optional[float] = None

    def add_inputs(self, paths: Iterable[str]):
        for path in paths:
            if path:
                self.inputs[path] = file_sha256(path)

    def add_artifacts(self, paths: Iterable[str]):
        for path in paths:
            self.artifacts[path] = file_sha256(path)

    @property
    def path(self) -> str:
        return os.path.join(self.config["out"], f"manifest_{self.command}.json")

    def write(self) -> str:
        if self.wall_clock is not None:
            raise ContractViolation(f"manifest for '{self.command}' was already written")
        self.wall_clock = time.time() - self.started
        with open(self.path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")
        bt.logging.success(
            prefix=f"Saved {self.command} manifest",
            sufix=f"<blue>{self.path}</blue> ({len(self.artifacts)} artifact(s), {self.wall_clock:.1f}s)",
        )
        return self.path


def read_manifest(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)

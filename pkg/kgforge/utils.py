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
import csv
import copy
import hashlib
import wandb
import bittensor as bt
from typing import Iterable, List, Optional, Sequence
import kgforge


def derive_seed(seed: int, *keys) -> int:
    """Stable 63-bit child seed for (seed, *keys); independent jobs never share a stream."""
    material = ":".join(str(key) for key in (seed,) + keys).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(material, digest_size=8).digest(), "little") >> 1


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def read_csv(path: str) -> List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def thread_limit(jobs: int) -> int:
    """Worker count for per-node-type jobs, capped by KGFORGE_THREADS."""
    cap = os.environ.get("KGFORGE_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            bt.logging.warning(f"Ignoring KGFORGE_THREADS={cap!r}; expected an integer")
    return max(1, min(jobs, limit))


def init_wandb(config: "bt.Config", command: str, reinit: bool = False) -> Optional["wandb.sdk.wandb_run.Run"]:
    """Starts a new wandb run for ``command``, or returns None when tracking is off."""
    if not config.wandb.on:
        return None
    tags = [
        command,
        kgforge.__version__,
        str(kgforge.__spec_version__),
        f"fusion_{config.fusion.method}",
        f"gcl_{config.gcl.method}",
    ]
    if config.embeddings.mock:
        tags.append("mock")

    wandb_config = {
        key: copy.deepcopy(config.get(key, None))
        for key in ("fusion", "gcl", "kge", "optim", "eval", "seed")
    }
    run = wandb.init(
        anonymous="allow",
        reinit=reinit,
        project=config.wandb.project_name,
        entity=config.wandb.entity,
        config=wandb_config,
        mode="offline" if config.wandb.offline else "online",
        dir=config.out,
        tags=tags,
        notes=config.wandb.notes,
    )
    bt.logging.success(
        prefix="Started a new wandb run",
        sufix=f"<blue> {run.name} </blue>",
    )
    return run

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

import struct
import torch
import numpy as np
import bittensor as bt
from collections import OrderedDict
from typing import Dict, Optional
from kgforge.errors import LoadError
from kgforge.numerics.tensor import DTYPE, ParamStore

MAGIC = b"KGF1"
OPT_PREFIX = "opt/"
META_PREFIX = "meta/"


def checkpoint_entries(
    params: ParamStore, meta: Optional[Dict[str, float]] = None
) -> "OrderedDict[str, torch.Tensor]":
    """Flattens parameters, optimizer moments and scalar metadata into named tensors."""
    entries: "OrderedDict[str, torch.Tensor]" = OrderedDict()
    for name, param in params.items():
        entries[name] = param.detach()
    for name in params:
        if name in params.moments:
            m, v = params.moments[name]
            entries[f"{OPT_PREFIX}m/{name}"] = m
            entries[f"{OPT_PREFIX}v/{name}"] = v
    entries[f"{OPT_PREFIX}step"] = torch.tensor([float(params.step)], dtype=DTYPE)
    for key, value in (meta or {}).items():
        entries[f"{META_PREFIX}{key}"] = torch.tensor([float(value)], dtype=DTYPE)
    return entries


def save_checkpoint(
    path: str, params: ParamStore, meta: Optional[Dict[str, float]] = None
) -> str:
    entries = checkpoint_entries(params, meta)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(entries)))
        for name, tensor in entries.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", tensor.dim()))
            for dim in tensor.shape:
                f.write(struct.pack("<Q", dim))
            f.write(tensor.detach().to(DTYPE).contiguous().numpy().astype("<f8").tobytes())
    bt.logging.success(prefix="Saved checkpoint", sufix=f"<blue>{path}</blue>")
    return path


def load_checkpoint(path: str) -> "OrderedDict[str, torch.Tensor]":
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except FileNotFoundError:
        raise LoadError("checkpoint file not found", path=path)
    if blob[:4] != MAGIC:
        raise LoadError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}", path=path)

    entries: "OrderedDict[str, torch.Tensor]" = OrderedDict()
    try:
        offset = 4
        (count,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        for _ in range(count):
            (name_length,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_length].decode("utf-8")
            offset += name_length
            (rank,) = struct.unpack_from("<B", blob, offset)
            offset += 1
            shape = struct.unpack_from("<" + "Q" * rank, blob, offset)
            offset += 8 * rank
            size = int(np.prod(shape)) if rank else 1
            payload = np.frombuffer(blob, dtype="<f8", count=size, offset=offset)
            offset += 8 * size
            entries[name] = torch.from_numpy(payload.copy()).reshape(shape)
    except (struct.error, ValueError) as e:
        raise LoadError(f"truncated or corrupt checkpoint: {e}", path=path)
    return entries


def apply_checkpoint(
    entries: Dict[str, torch.Tensor], params: ParamStore, strict: bool = True
) -> Dict[str, float]:
    """Copies checkpoint values into ``params`` and restores optimizer state.

    Returns the ``meta/`` scalars.
    """
    missing = [name for name in params if name not in entries]
    if missing and strict:
        raise LoadError(f"checkpoint is missing parameters {missing}")
    with torch.no_grad():
        for name, param in params.items():
            if name not in entries:
                continue
            value = entries[name]
            if tuple(value.shape) != tuple(param.shape):
                raise LoadError(
                    f"shape mismatch for {name}: checkpoint {tuple(value.shape)} vs model {tuple(param.shape)}"
                )
            param.copy_(value)
            m = entries.get(f"{OPT_PREFIX}m/{name}")
            v = entries.get(f"{OPT_PREFIX}v/{name}")
            if m is not None and v is not None:
                params.moments[name] = (m.clone(), v.clone())

    step = entries.get(f"{OPT_PREFIX}step")
    if step is not None:
        params.step = int(step.item())

    unknown = [
        name
        for name in entries
        if not name.startswith(OPT_PREFIX)
        and not name.startswith(META_PREFIX)
        and name not in params
    ]
    if unknown:
        bt.logging.warning(f"Checkpoint entries not used by the model: {unknown}")

    return {
        name[len(META_PREFIX) :]: float(value.item())
        for name, value in entries.items()
        if name.startswith(META_PREFIX)
    }

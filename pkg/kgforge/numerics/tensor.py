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

import re
import torch
import numpy as np
import bittensor as bt
from collections import OrderedDict
from torch.overrides import TorchFunctionMode
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union
from kgforge.errors import ContractViolation, NumericFault

# Every tensor in the pipeline is f64.
DTYPE = torch.float64


def as_tensor(data, shape: Optional[Sequence[int]] = None) -> torch.Tensor:
    """Builds a row-major f64 tensor, checking product(shape) == len(data) when a shape is given."""
    tensor = torch.as_tensor(data, dtype=DTYPE)
    if shape is not None:
        expected = int(np.prod(shape)) if len(shape) else 1
        if tensor.numel() != expected:
            raise ContractViolation(
                f"data length {tensor.numel()} does not match shape {tuple(shape)}"
            )
        tensor = tensor.reshape(tuple(shape))
    return tensor


def check_finite(tensor: torch.Tensor, op: str) -> torch.Tensor:
    """Raises NumericFault naming ``op`` if ``tensor`` holds NaN or Inf."""
    if not torch.isfinite(tensor).all():
        bad = int((~torch.isfinite(tensor)).sum().item())
        raise NumericFault(f"{bad} non-finite value(s) in output", op=op)
    return tensor


class NanTrace(TorchFunctionMode):
    """Remembers the first torch op whose floating-point output holds a NaN.

    The mode stack is thread-local, so concurrent pretraining jobs trace independently.
    Infinities are not traced: masked logits legitimately carry -inf.
    """

    def __init__(self):
        super().__init__()
        self.op: Optional[str] = None

    def __torch_function__(self, func, types, args=(), kwargs=None):
        output = func(*args, **(kwargs or {}))
        if self.op is None and _holds_nan(output):
            self.op = getattr(func, "__name__", repr(func)).strip("_")
        return output


def _holds_nan(output) -> bool:
    if isinstance(output, (tuple, list)):
        return any(_holds_nan(item) for item in output)
    if isinstance(output, torch.Tensor) and output.is_floating_point():
        return bool(torch.isnan(output.detach()).any())
    return False


def store_name(prefix: str, torch_name: str) -> str:
    # "layer.0.rel.3" -> "layer0/rel3"
    name = re.sub(r"\.(\d+)", r"\1", torch_name).replace(".", "/")
    return f"{prefix}/{name}" if prefix else name


class ParamStore:
    """Named learnable tensors, their gradients, and optimizer state.

    Parameters are shared with the owning ``torch.nn.Module`` objects, so an optimizer
    step on the store updates the modules in place. Gradients live on ``param.grad``;
    ``moments`` holds the Adam first/second moments keyed by parameter name.
    """

    def __init__(self):
        self.params: "OrderedDict[str, torch.nn.Parameter]" = OrderedDict()
        self.moments: Dict[str, Tuple[torch.Tensor, torch.Tensor]] = {}
        self.step: int = 0

    @classmethod
    def from_modules(cls, modules: Dict[str, torch.nn.Module], trainable_only: bool = True) -> "ParamStore":
        store = cls()
        for prefix, module in modules.items():
            store.add_module(prefix, module, trainable_only)
        return store

    def add_module(self, prefix: str, module: torch.nn.Module, trainable_only: bool = True):
        for torch_name, param in module.named_parameters():
            if param.requires_grad or not trainable_only:
                self.add(store_name(prefix, torch_name), param)

    def add(self, name: str, param: torch.nn.Parameter):
        if name in self.params:
            raise ContractViolation(f"duplicate parameter name {name}")
        if name.startswith("opt/") or name.startswith("meta/"):
            raise ContractViolation(f"parameter name {name} uses a reserved prefix")
        self.params[name] = param

    def __getitem__(self, name: str) -> torch.nn.Parameter:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def items(self):
        return self.params.items()

    @property
    def grads(self) -> Dict[str, Optional[torch.Tensor]]:
        return {name: param.grad for name, param in self.params.items()}

    def zero_grad(self):
        for param in self.params.values():
            param.grad = None

    def materialize_grads(self):
        # Parameters untouched by the graph get an explicit zero gradient.
        for param in self.params.values():
            if param.grad is None:
                param.grad = torch.zeros_like(param)

    def num_parameters(self) -> int:
        return sum(param.numel() for param in self.params.values())

    def snapshot(self) -> Dict[str, torch.Tensor]:
        return {name: param.detach().clone() for name, param in self.params.items()}

    def restore(self, snapshot: Dict[str, torch.Tensor]):
        with torch.no_grad():
            for name, value in snapshot.items():
                self.params[name].copy_(value)


def forward_backward(
    loss_fn: Callable[..., Union[torch.Tensor, Tuple[torch.Tensor, ...]]],
    params: ParamStore,
    *inputs: torch.Tensor,
) -> Tuple[torch.Tensor, ...]:
    """Runs ``loss_fn(*inputs)`` and accumulates d(loss)/d(param) into ``params``.

    ``loss_fn`` returns either the scalar loss or a tuple whose first element is the
    scalar loss. Gradients accumulate across calls until ``params.zero_grad()``.
    A non-finite loss raises NumericFault naming the first op that produced a NaN,
    or ``"loss"`` when no op did.
    Returns the (detached) outputs.
    """
    for index, tensor in enumerate(inputs):
        if isinstance(tensor, torch.Tensor) and tensor.is_floating_point():
            check_finite(tensor, op=f"input[{index}]")

    with NanTrace() as trace:
        outputs = loss_fn(*inputs)
    if isinstance(outputs, torch.Tensor):
        outputs = (outputs,)
    loss = outputs[0]
    if loss.numel() != 1:
        raise ContractViolation(
            f"loss must be a scalar, got shape {tuple(loss.shape)}"
        )
    check_finite(loss, op=trace.op or "loss")
    if loss.requires_grad:
        loss.reshape(()).backward()
    params.materialize_grads()
    for name, grad in params.grads.items():
        check_finite(grad, op=f"grad:{name}")
    return tuple(
        output.detach() if isinstance(output, torch.Tensor) else output
        for output in outputs
    )


def check_param_gradients(
    loss_fn: Callable[[], torch.Tensor],
    params: ParamStore,
    trials: int = 100,
    eps: float = 1e-5,
    rtol: float = 1e-4,
    atol: float = 1e-7,
    seed: int = 0,
    names: Optional[List[str]] = None,
) -> float:
    """Compares reverse-mode gradients against central finite differences.

    ``trials`` coordinates are drawn at random across the named parameters. ``loss_fn``
    must be deterministic. Returns the largest relative error observed and raises
    NumericFault when any coordinate exceeds ``atol + rtol * scale``.
    """
    names = list(names) if names is not None else list(params)
    if not names:
        raise ContractViolation("no parameters to check")

    params.zero_grad()
    forward_backward(loss_fn, params)
    analytic = {name: params[name].grad.detach().clone() for name in names}

    rng = np.random.default_rng(seed)
    worst = 0.0
    with torch.no_grad():
        for _ in range(trials):
            name = names[int(rng.integers(len(names)))]
            flat = params[name].view(-1)
            index = int(rng.integers(flat.numel()))
            original = flat[index].item()
            flat[index] = original + eps
            plus = float(loss_fn())
            flat[index] = original - eps
            minus = float(loss_fn())
            flat[index] = original
            numeric = (plus - minus) / (2 * eps)
            exact = analytic[name].view(-1)[index].item()
            scale = max(abs(numeric), abs(exact))
            error = abs(numeric - exact)
            if scale > 0:
                worst = max(worst, error / scale)
            if error > atol + rtol * scale:
                raise NumericFault(
                    f"gradient mismatch at {name}[{index}]: analytic {exact:.10g} vs numeric {numeric:.10g}",
                    op=f"gradcheck:{name}",
                )
    bt.logging.trace("check_param_gradients", f"max relative error {worst:.3e}")
    return worst

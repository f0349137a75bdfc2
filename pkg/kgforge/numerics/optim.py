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

import argparse
import math
import torch
import bittensor as bt
from dataclasses import dataclass, asdict, replace
from kgforge.errors import ConfigurationError, ContractViolation
from kgforge.numerics.tensor import ParamStore


@dataclass(frozen=True)
class OptimConfig:
    """Optimizer and training-loop defaults.
    Note: values follow the hyperparameter table the pipeline was tuned with.
    """

    learning_rate: float = 0.001
    batch_size: int = 128
    epochs: int = 100
    dropout: float = 0.2
    reg_weight: float = 0.01
    max_grad_norm: float = 1.0
    warmup_steps: int = 200
    patience: int = 3
    schedule: str = "cosine"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(
                f"learning rate must be > 0, got {self.learning_rate}",
                key="optim.learning_rate",
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(
                f"dropout must lie in [0, 1), got {self.dropout}", key="optim.dropout"
            )
        if self.patience < 0:
            raise ConfigurationError(
                f"patience must be >= 0, got {self.patience}", key="optim.patience"
            )
        if self.schedule not in ("cosine", "constant"):
            raise ConfigurationError(
                f"unknown learning-rate schedule {self.schedule}", key="optim.schedule"
            )

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser):
        parser.add_argument(
            "--optim.learning_rate", type=float, default=cls.learning_rate, help="Peak Adam learning rate."
        )
        parser.add_argument(
            "--optim.batch_size",
            type=int,
            default=cls.batch_size,
            help="Random-walk roots per GraphSAINT batch.",
        )
        parser.add_argument("--optim.epochs", type=int, default=cls.epochs, help="Maximum training epochs.")
        parser.add_argument("--optim.dropout", type=float, default=cls.dropout, help="RGCN dropout probability.")
        parser.add_argument(
            "--optim.reg_weight", type=float, default=cls.reg_weight, help="Frobenius regularization weight."
        )
        parser.add_argument(
            "--optim.max_grad_norm",
            type=float,
            default=cls.max_grad_norm,
            help="Global gradient norm clip.",
        )
        parser.add_argument(
            "--optim.warmup_steps", type=int, default=cls.warmup_steps, help="Linear learning-rate warmup steps."
        )
        parser.add_argument(
            "--optim.patience",
            type=int,
            default=cls.patience,
            help="Epochs without validation improvement before stopping.",
        )
        parser.add_argument(
            "--optim.schedule",
            type=str,
            choices=["cosine", "constant"],
            default=cls.schedule,
            help="Learning-rate schedule after warmup.",
        )

    @classmethod
    def from_config(cls, config: "bt.Config") -> "OptimConfig":
        return cls(
            **{key: config.optim[key] for key in asdict(cls()) if key in config.optim}
        )


def schedule_lr(step: int, config: OptimConfig, total_steps: int) -> float:
    """Linear warmup 0 -> base over ``warmup_steps``, then cosine decay base -> 0 at ``total_steps``."""
    if total_steps <= config.warmup_steps:
        raise ConfigurationError(
            f"total steps ({total_steps}) must exceed warmup steps ({config.warmup_steps})",
            key="optim.warmup_steps",
        )
    if step < 0:
        raise ContractViolation(f"step must be >= 0, got {step}")
    base = config.learning_rate
    if config.schedule == "constant":
        return base
    if step < config.warmup_steps:
        return base * step / config.warmup_steps
    if step >= total_steps:
        return 0.0
    progress = (step - config.warmup_steps) / (total_steps - config.warmup_steps)
    return base * 0.5 * (1.0 + math.cos(math.pi * progress))


def clip_gradients(params: ParamStore, max_norm: float) -> float:
    """Scales all gradients by max_norm/g when the global L2 norm g exceeds max_norm.

    Returns the factor applied (1.0 when untouched).
    """
    grads = params.grads
    missing = [name for name, grad in grads.items() if grad is None]
    if missing:
        raise ContractViolation(f"gradients not populated for {missing}")
    total = math.sqrt(sum(float((grad * grad).sum()) for grad in grads.values()))
    if total <= max_norm:
        return 1.0
    factor = max_norm / total
    with torch.no_grad():
        for grad in grads.values():
            grad.mul_(factor)
    bt.logging.trace("clip_gradients", f"norm {total:.4f} factor {factor:.4f}")
    return factor


def adam_step(params: ParamStore, config: OptimConfig, lr: float = None) -> ParamStore:
    """One Adam update with bias correction. Moments persist in ``params.moments``."""
    lr = config.learning_rate if lr is None else lr
    for name, param in params.items():
        if param.grad is None:
            raise ContractViolation(f"missing gradient for parameter {name}")

    params.step += 1
    t = params.step
    beta1, beta2 = config.beta1, config.beta2
    with torch.no_grad():
        for name, param in params.items():
            grad = param.grad
            if name not in params.moments:
                params.moments[name] = (torch.zeros_like(param), torch.zeros_like(param))
            m, v = params.moments[name]
            m.mul_(beta1).add_(grad, alpha=1 - beta1)
            v.mul_(beta2).addcmul_(grad, grad, value=1 - beta2)
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            param.addcdiv_(m_hat, v_hat.sqrt() + config.eps, value=-lr)
    return params


def fit_warmup(config: OptimConfig, total_steps: int) -> OptimConfig:
    """Shrinks the warmup to a tenth of ``total_steps`` when a short run cannot fit it."""
    if total_steps > config.warmup_steps or config.schedule == "constant":
        return config
    warmup = max(0, total_steps // 10)
    if total_steps <= warmup:
        raise ConfigurationError(
            f"run of {total_steps} optimizer step(s) is too short to schedule", key="optim.epochs"
        )
    bt.logging.warning(
        f"warmup of {config.warmup_steps} steps does not fit {total_steps} total steps; using {warmup}"
    )
    return replace(config, warmup_steps=warmup)

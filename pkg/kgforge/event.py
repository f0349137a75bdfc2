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

import threading
import bittensor as bt
from loguru import logger
from dataclasses import asdict, dataclass, fields
from typing import Any, Optional


@dataclass
class TrainingEvent:
    stage: str  # 'pretrain' or 'train'
    epoch: int  # Epoch (pretraining: optimizer step) the event closes
    train_loss: float  # Mean training loss over the epoch
    lr: float  # Learning rate of the last optimizer step
    valid_loss: Optional[float] = None  # Validation loss, train stage only
    best_flag: bool = False  # Parameters at this epoch are the best so far
    node_type: Optional[str] = None  # Pretraining job the event belongs to
    num_batches: Optional[int] = None  # Subgraph batches consumed in the epoch
    clip_factor: Optional[float] = None  # Smallest gradient-clip factor in the epoch
    jsd: Optional[float] = None  # JSD between positive and negative score histograms
    step_length: Optional[float] = None  # Wall-clock seconds spent in the epoch

    @staticmethod
    def from_dict(event_dict: dict) -> "TrainingEvent":
        """Converts a dictionary to a TrainingEvent, dropping unknown keys."""
        names = {field.name for field in fields(TrainingEvent)}
        unknown = sorted(set(event_dict) - names)
        if unknown:
            bt.logging.warning(f"TrainingEvent.from_dict: ignoring unknown keys {unknown}")
        return TrainingEvent(**{key: value for key, value in event_dict.items() if key in names})


class EventLogger:
    """Routes training events to the loguru EVENTS sink and, optionally, a wandb run.

    Safe to call from concurrent pretraining jobs.
    """

    def __init__(self, save_events: bool = False, wandb_run: Any = None):
        self.save_events = save_events
        self.wandb_run = wandb_run
        self._lock = threading.Lock()

    def __call__(self, event: TrainingEvent):
        event_dict = asdict(event)
        bt.logging.trace("event:", str(event_dict))
        with self._lock:
            if self.save_events:
                logger.log("EVENTS", "events", **event_dict)
            if self.wandb_run is not None:
                prefix = f"{event.stage}/{event.node_type}" if event.node_type else event.stage
                self.wandb_run.log(
                    {
                        f"{prefix}/{key}": value
                        for key, value in event_dict.items()
                        if isinstance(value, (int, float))
                    }
                )

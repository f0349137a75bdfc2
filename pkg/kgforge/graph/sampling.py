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
from typing import Dict, List, Sequence, Tuple
from kgforge.errors import ContractViolation, SamplingError
from kgforge.graph.store import KnowledgeGraph, Triple

MAX_RETRIES = 100


class NegativeSampler:
    """Type-compatible, filtered triple corruption.

    For every positive, ``ratio`` corruptions replace the head or the tail (probability
    1/2 each) with a node whose type was observed in that slot for the relation.
    Corruptions that are known triples of ``graph`` are rejected and redrawn, up to
    MAX_RETRIES per slot.
    """

    def __init__(self, graph: KnowledgeGraph):
        self.graph = graph
        self._pools: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def pools(self, relation: int) -> Tuple[np.ndarray, np.ndarray]:
        if relation not in self._pools:
            types = self.graph.relation_types.get(relation)
            if types is None:
                everyone = np.arange(self.graph.num_nodes, dtype=np.int64)
                self._pools[relation] = (everyone, everyone)
            else:
                head_types, tail_types = types
                self._pools[relation] = (
                    np.array(
                        sorted(n for t in head_types for n in self.graph.type_index[t]),
                        dtype=np.int64,
                    ),
                    np.array(
                        sorted(n for t in tail_types for n in self.graph.type_index[t]),
                        dtype=np.int64,
                    ),
                )
        return self._pools[relation]

    def sample(self, positives: Sequence[Triple], ratio: int, seed: int) -> List[Triple]:
        if ratio < 1:
            raise ContractViolation(f"negative ratio must be >= 1, got {ratio}")
        rng = np.random.default_rng(seed)
        negatives: List[Triple] = []
        for head, relation, tail in positives:
            head_pool, tail_pool = self.pools(relation)
            head_ok, tail_ok = len(head_pool) > 1, len(tail_pool) > 1
            if not (head_ok or tail_ok):
                message = (
                    f"relation {self.graph.relations[relation]!r} has a single compatible "
                    f"candidate node; cannot corrupt ({head}, {relation}, {tail})"
                )
                bt.logging.error(message)
                raise SamplingError(message)
            for _ in range(ratio):
                for _attempt in range(MAX_RETRIES):
                    corrupt_head = head_ok and (not tail_ok or rng.random() < 0.5)
                    if corrupt_head:
                        candidate = Triple(int(head_pool[rng.integers(len(head_pool))]), relation, tail)
                    else:
                        candidate = Triple(head, relation, int(tail_pool[rng.integers(len(tail_pool))]))
                    if not self.graph.contains(candidate):
                        negatives.append(candidate)
                        break
                else:
                    message = (
                        f"sampling exhausted after {MAX_RETRIES} retries for "
                        f"({head}, {self.graph.relations[relation]}, {tail})"
                    )
                    bt.logging.error(message)
                    raise SamplingError(message)
        return negatives


def sample_negatives(
    positives: Sequence[Triple], graph: KnowledgeGraph, ratio: int, seed: int
) -> List[Triple]:
    """``ratio`` filtered, type-compatible corruptions per positive; deterministic per seed."""
    return NegativeSampler(graph).sample(positives, ratio, seed)

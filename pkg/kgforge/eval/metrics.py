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

import math
import numpy as np
import bittensor as bt
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple
from kgforge.errors import ConfigurationError, ContractViolation, UndefinedMetricError
from kgforge.graph.store import Triple

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ScoredEdge:
    triple: Triple
    score: float
    label: int

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 < self.score < 1.0):
            raise ContractViolation(f"score {self.score} of {tuple(self.triple)} is not inside (0, 1)")
        if self.label not in (0, 1):
            raise ContractViolation(f"label must be 0 or 1, got {self.label}")

    @property
    def relation(self) -> int:
        return self.triple.relation


def _arrays(scored: Sequence[ScoredEdge]) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.array([edge.score for edge in scored], dtype=np.float64)
    labels = np.array([edge.label for edge in scored], dtype=np.int64)
    return scores, labels


def _check_threshold(threshold: float):
    if not 0.0 < threshold < 1.0:
        raise ConfigurationError(f"threshold must lie in (0, 1), got {threshold}", key="eval.threshold")


def average_precision(scored: Sequence[ScoredEdge]) -> float:
    """Mean over positives of precision at the positive's rank.

    Ranks come from a stable descending sort, so ties keep input order.
    """
    scores, labels = _arrays(scored)
    if labels.sum() == 0:
        raise UndefinedMetricError("average precision is undefined without positives")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    hits = np.cumsum(ranked)
    ranks = np.arange(1, len(ranked) + 1)
    return float(np.mean(hits[ranked == 1] / ranks[ranked == 1]))


def confusion(scored: Sequence[ScoredEdge], threshold: float = DEFAULT_THRESHOLD) -> Tuple[int, int, int]:
    """(true positives, false positives, false negatives) with prediction = score >= threshold."""
    _check_threshold(threshold)
    scores, labels = _arrays(scored)
    predicted = scores >= threshold
    tp = int(np.sum(predicted & (labels == 1)))
    fp = int(np.sum(predicted & (labels == 0)))
    fn = int(np.sum(~predicted & (labels == 1)))
    return tp, fp, fn


def precision_recall(scored: Sequence[ScoredEdge], threshold: float = DEFAULT_THRESHOLD) -> Tuple[float, float]:
    tp, fp, fn = confusion(scored, threshold)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def f1_score(scored: Sequence[ScoredEdge], threshold: float = DEFAULT_THRESHOLD) -> float:
    precision, recall = precision_recall(scored, threshold)
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def per_relation_precision(scored: Sequence[ScoredEdge], threshold: float = DEFAULT_THRESHOLD) -> Dict[int, float]:
    """TP / (TP + FP) per relation. Relations without predicted positives are omitted."""
    _check_threshold(threshold)
    by_relation: Dict[int, list] = {}
    for edge in scored:
        by_relation.setdefault(edge.relation, []).append(edge)
    precision: Dict[int, float] = {}
    omitted = []
    for relation in sorted(by_relation):
        tp, fp, _ = confusion(by_relation[relation], threshold)
        if tp + fp == 0:
            omitted.append(relation)
            continue
        precision[relation] = tp / (tp + fp)
    if omitted:
        bt.logging.debug(f"per_relation_precision(): no predicted positives for relation(s) {omitted}")
    return precision


def tune_threshold(scored: Sequence[ScoredEdge]) -> float:
    """Score threshold with the highest F1 (the largest such threshold on ties)."""
    scores, labels = _arrays(scored)
    if labels.sum() == 0:
        raise UndefinedMetricError("cannot tune a threshold without positives")
    order = np.argsort(-scores, kind="stable")
    ranked_scores, ranked_labels = scores[order], labels[order]
    tp = np.cumsum(ranked_labels)
    fp = np.cumsum(1 - ranked_labels)
    # Candidate cut after the last item of every distinct score.
    last = np.append(ranked_scores[1:] != ranked_scores[:-1], True)
    f1 = 2 * tp[last] / (2 * tp[last] + fp[last] + (labels.sum() - tp[last]))
    best = int(np.argmax(f1))
    best_threshold, best_f1 = float(ranked_scores[last][best]), float(f1[best])
    bt.logging.debug(f"tune_threshold(): {best_threshold:.6f} (F1 {best_f1:.6f})")
    return best_threshold

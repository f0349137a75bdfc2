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
import bittensor as bt
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple
from kgforge.errors import ConfigurationError, DataError, LoadError
from kgforge.eval.metrics import (
    DEFAULT_THRESHOLD,
    ScoredEdge,
    average_precision,
    confusion,
    f1_score,
    precision_recall,
    per_relation_precision,
    tune_threshold,
)
from kgforge.graph.sampling import sample_negatives
from kgforge.graph.split import PARTS, EdgeSplit
from kgforge.graph.store import KnowledgeGraph, Triple
from kgforge.kge.model import KgeModel, predict_links
from kgforge.utils import derive_seed, write_csv

RELATION_HEADER = ["relation", "precision", "n_pos"]


class ThresholdMode(Enum):
    fixed = "fixed"
    tuned = "tuned"


@dataclass(frozen=True)
class EvalConfig:
    split: str = "test"
    ratios: Tuple[int, ...] = (1,)
    threshold: float = DEFAULT_THRESHOLD
    threshold_mode: str = ThresholdMode.fixed.value
    seed: Optional[int] = None

    def __post_init__(self):
        if self.split not in PARTS:
            raise ConfigurationError(f"unknown split part {self.split!r}", key="eval.split")
        if not self.ratios or any(ratio < 1 for ratio in self.ratios):
            raise ConfigurationError(f"negative ratios must be >= 1, got {self.ratios}", key="eval.ratios")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigurationError(f"threshold must lie in (0, 1), got {self.threshold}", key="eval.threshold")
        if self.threshold_mode not in {m.value for m in ThresholdMode}:
            raise ConfigurationError(f"unknown threshold mode {self.threshold_mode!r}", key="eval.threshold_mode")

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser):
        parser.add_argument(
            "--eval.split", type=str, choices=list(PARTS), default=cls.split, help="Split part to evaluate."
        )
        parser.add_argument(
            "--eval.ratios",
            type=int,
            nargs="+",
            default=list(cls.ratios),
            help="Negative sampling ratios; one report per ratio.",
        )
        parser.add_argument(
            "--eval.threshold", type=float, default=cls.threshold, help="Score threshold for F1 and precision."
        )
        parser.add_argument(
            "--eval.threshold_mode",
            type=str,
            choices=[m.value for m in ThresholdMode],
            default=cls.threshold_mode,
            help="fixed: use --eval.threshold. tuned: maximize F1 on the validation split.",
        )
        parser.add_argument(
            "--eval.seed",
            type=int,
            default=None,
            help="Seed for evaluation negatives (defaults to --seed).",
        )

    @classmethod
    def from_config(cls, config: "bt.Config") -> "EvalConfig":
        seed = config.eval.seed if config.eval.seed is not None else config.seed
        return cls(
            split=config.eval.split,
            ratios=tuple(int(ratio) for ratio in config.eval.ratios),
            threshold=config.eval.threshold,
            threshold_mode=config.eval.threshold_mode,
            seed=seed,
        )


@dataclass
class EvalReport:
    """Metrics of one (split part, negative ratio) evaluation.

    ``per_relation`` maps relation name -> (precision, predicted positives); relations
    without predicted positives are listed in ``omitted`` instead.
    """

    split: str
    ratio: int
    seed: int
    positives: int
    negatives: int
    threshold: float
    threshold_mode: str
    ap: float
    f1: float
    precision: float
    recall: float
    per_relation: Dict[str, Tuple[float, int]] = field(default_factory=dict)
    omitted: List[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            "[report]",
            f"split = {self.split}",
            f"ratio = {self.ratio}",
            f"seed = {self.seed}",
            f"positives = {self.positives}",
            f"negatives = {self.negatives}",
            f"threshold = {self.threshold!r}",
            f"threshold_mode = {self.threshold_mode}",
            "",
            "[metrics]",
            f"ap = {self.ap!r}",
            f"f1 = {self.f1!r}",
            f"precision = {self.precision!r}",
            f"recall = {self.recall!r}",
            "",
            "[per_relation]",
        ]
        for name, (precision, count) in self.per_relation.items():
            lines.append(f"{name} = {precision!r},{count}")
        lines += ["", "[omitted]"]
        lines += [f"{name} = 0" for name in self.omitted]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, path: Optional[str] = None) -> "EvalReport":
        sections: Dict[str, List[Tuple[str, str]]] = {}
        current = None
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            if line.startswith("[") and line.endswith("]"):
                current = sections.setdefault(line[1:-1], [])
                continue
            key, sep, value = line.rpartition(" = ")
            if current is None or not sep:
                raise LoadError(f"malformed report line {line!r}", path=path, line=line_number)
            current.append((key, value))
        try:
            header = dict(sections["report"])
            metrics = dict(sections["metrics"])
            per_relation = {}
            for name, value in sections.get("per_relation", []):
                precision, count = value.split(",")
                per_relation[name] = (float(precision), int(count))
            return cls(
                split=header["split"],
                ratio=int(header["ratio"]),
                seed=int(header["seed"]),
                positives=int(header["positives"]),
                negatives=int(header["negatives"]),
                threshold=float(header["threshold"]),
                threshold_mode=header["threshold_mode"],
                ap=float(metrics["ap"]),
                f1=float(metrics["f1"]),
                precision=float(metrics["precision"]),
                recall=float(metrics["recall"]),
                per_relation=per_relation,
                omitted=[name for name, _ in sections.get("omitted", [])],
            )
        except (KeyError, ValueError) as e:
            raise LoadError(f"incomplete report: {e}", path=path)

    def save(self, path: str) -> str:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_text())
        bt.logging.success(prefix="Saved evaluation report", sufix=f"<blue>{path}</blue>")
        return path

    @classmethod
    def load(cls, path: str) -> "EvalReport":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_text(f.read(), path=path)


def write_per_relation_csv(report: EvalReport, path: str) -> str:
    return write_csv(
        path,
        RELATION_HEADER,
        ([name, repr(precision), count] for name, (precision, count) in report.per_relation.items()),
    )


def score_part(
    model: KgeModel,
    graph: KnowledgeGraph,
    positives: Sequence[Triple],
    ratio: int,
    seed: int,
    features=None,
) -> List[ScoredEdge]:
    """Scores ``positives`` and ``ratio`` filtered corruptions of each (labels 1 then 0)."""
    negatives = sample_negatives(positives, graph, ratio, seed)
    triples = list(positives) + list(negatives)
    scores = predict_links(model, triples, features=features).tolist()
    labels = [1] * len(positives) + [0] * len(negatives)
    return [ScoredEdge(Triple(*triple), score, label) for triple, score, label in zip(triples, scores, labels)]


def evaluate(
    model: KgeModel,
    graph: KnowledgeGraph,
    split: EdgeSplit,
    part: str = "test",
    ratio: int = 1,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    threshold_mode: str = ThresholdMode.fixed.value,
    features=None,
) -> EvalReport:
    """Link-prediction report for one split part at one negative ratio.

    Negatives are type-compatible, filtered against every known triple and fixed by
    (``seed``, ``part``, ``ratio``). In tuned mode the threshold maximizing F1 on the
    validation part replaces ``threshold``.
    """
    positives = [graph.triples[i] for i in split.part(part)]
    if not positives:
        message = f"split part {part!r} holds no triples"
        bt.logging.error(message)
        raise DataError(message)

    if threshold_mode == ThresholdMode.tuned.value:
        valid = [graph.triples[i] for i in split.valid]
        if not valid:
            raise ConfigurationError("tuned threshold needs a nonempty validation split", key="eval.threshold_mode")
        threshold = tune_threshold(score_part(model, graph, valid, ratio, derive_seed(seed, "eval", "valid", ratio), features))
        bt.logging.info(f"evaluate(): tuned threshold {threshold:.6f} on the validation split")

    scored = score_part(model, graph, positives, ratio, derive_seed(seed, "eval", part, ratio), features)
    precision, recall = precision_recall(scored, threshold)
    relation_precision = per_relation_precision(scored, threshold)
    per_relation, omitted = {}, []
    for relation in sorted({edge.relation for edge in scored}):
        name = graph.relations[relation]
        if relation in relation_precision:
            tp, fp, _ = confusion([edge for edge in scored if edge.relation == relation], threshold)
            per_relation[name] = (relation_precision[relation], tp + fp)
        else:
            omitted.append(name)
    if omitted:
        bt.logging.info(f"evaluate(): no predicted positives for {omitted}; omitted from the relation table")

    report = EvalReport(
        split=part,
        ratio=ratio,
        seed=seed,
        positives=len(positives),
        negatives=len(scored) - len(positives),
        threshold=threshold,
        threshold_mode=threshold_mode,
        ap=average_precision(scored),
        f1=f1_score(scored, threshold),
        precision=precision,
        recall=recall,
        per_relation=per_relation,
        omitted=omitted,
    )
    bt.logging.info(
        f"evaluate(): {part} 1:{ratio} AP {report.ap:.4f} F1 {report.f1:.4f} "
        f"P {report.precision:.4f} R {report.recall:.4f}"
    )
    return report

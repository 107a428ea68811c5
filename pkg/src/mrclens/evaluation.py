"""Exact-match / token-F1 scoring and drop computation.

Implements the SQuAD v1.1 metric rules: answers are normalized (lowercase,
no punctuation, no articles, collapsed whitespace), EM is string equality
after normalization, and F1 is the harmonic mean of token precision/recall,
each taken as the max over the gold answers.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .ablations import AblationId
from .baseline_reader import Predictions
from .squad_io import Dataset
from .text_analysis import normalize_answer


class MissingPredictionError(ValueError):
    """The predictions mapping lacks entries for some dataset question ids."""

    def __init__(self, ids: list[str]):
        shown = ", ".join(ids[:10]) + (", ..." if len(ids) > 10 else "")
        super().__init__(f"missing predictions for {len(ids)} question id(s): {shown}")
        self.ids = ids


def exact_match(pred: str, golds: Sequence[str]) -> int:
    """1 iff the normalized prediction equals some normalized gold answer."""
    normalized = normalize_answer(pred)
    return int(any(normalized == normalize_answer(g) for g in golds))


def token_f1(pred: str, golds: Sequence[str]) -> float:
    """Max over golds of token-level F1 on normalized token multisets.

    Both sides empty scores 1.0 for that gold; exactly one side empty scores
    0.0.
    """
    pred_tokens = normalize_answer(pred).split()
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold).split()
        best = max(best, _f1_pair(pred_tokens, gold_tokens))
    return best


def _f1_pair(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


@dataclass
class QuestionScore:
    em: int
    f1: float


@dataclass
class EvalResult:
    """Aggregate and per-question scores. ``em`` and ``f1`` are percentages
    (100 x mean of the per-question values, unrounded)."""

    em: float
    f1: float
    question_count: int
    per_question: dict[str, QuestionScore]

    def to_json(self) -> bytes:
        payload = {
            "em": self.em,
            "f1": self.f1,
            "n": self.question_count,
            "per_question": {
                qid: {"em": s.em, "f1": s.f1} for qid, s in self.per_question.items()
            },
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json(cls, raw: bytes) -> "EvalResult":
        obj = json.loads(raw.decode("utf-8"))
        return cls(
            em=obj["em"],
            f1=obj["f1"],
            question_count=obj["n"],
            per_question={
                qid: QuestionScore(s["em"], s["f1"])
                for qid, s in obj["per_question"].items()
            },
        )


def evaluate_dataset(dataset: Dataset, predictions: Predictions) -> EvalResult:
    """Score ``predictions`` against every question's gold answers.

    Every question id must have a prediction (:class:`MissingPredictionError`
    otherwise). Prediction ids not present in the dataset only trigger a
    warning. Aggregation uses compensated summation in document order, so
    results are stable regardless of how callers parallelize upstream steps.
    """
    missing = [qa.id for _, _, qa in dataset.iter_qas() if qa.id not in predictions]
    if missing:
        raise MissingPredictionError(missing)
    dataset_ids = {qa.id for _, _, qa in dataset.iter_qas()}
    unknown = [qid for qid in predictions if qid not in dataset_ids]
    if unknown:
        shown = ", ".join(unknown[:10]) + (", ..." if len(unknown) > 10 else "")
        warnings.warn(
            f"{len(unknown)} prediction id(s) not in dataset (ignored): {shown}",
            stacklevel=2,
        )

    per_question: dict[str, QuestionScore] = {}
    for _, _, qa in dataset.iter_qas():
        golds = [a.text for a in qa.answers]
        pred = predictions[qa.id]
        per_question[qa.id] = QuestionScore(exact_match(pred, golds), token_f1(pred, golds))

    n = len(per_question)
    if n == 0:
        return EvalResult(0.0, 0.0, 0, {})
    em = 100.0 * math.fsum(s.em for s in per_question.values()) / n
    f1 = 100.0 * math.fsum(s.f1 for s in per_question.values()) / n
    return EvalResult(em, f1, n, per_question)


@dataclass
class DeltaResult:
    """Performance change for one ablation relative to its baseline regime."""

    ablation: AblationId
    em: float
    f1: float
    f1_drop: float
    baseline_f1: float


def compute_drop(baseline: EvalResult, ablated: EvalResult, ablation: AblationId) -> DeltaResult:
    """F1 drop of the ablated run below its baseline (percentage points).

    Callers must pair each run with the baseline of the matching regime:
    truncated for the insertion ablations, full otherwise.
    """
    return DeltaResult(
        ablation=ablation,
        em=ablated.em,
        f1=ablated.f1,
        f1_drop=baseline.f1 - ablated.f1,
        baseline_f1=baseline.f1,
    )

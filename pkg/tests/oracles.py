"""Independent reference implementations used only to cross-check results.

The metric oracle below follows the official SQuAD v1.1 evaluation script
shape (regex-based normalization, Counter overlap), written separately from
the library so the two sides can disagree. The cosine oracle recomputes
TFIDF similarity from the raw definition without sharing the library's
vectorization code.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter


def oracle_normalize(s: str) -> str:
    def remove_articles(text):
        return re.sub(r"\b(a|an|the)\b", " ", text)

    def white_space_fix(text):
        return " ".join(text.split())

    def remove_punc(text):
        exclude = set(string.punctuation)
        return "".join(ch for ch in text if ch not in exclude)

    return white_space_fix(remove_articles(remove_punc(s.lower())))


def oracle_exact_match(prediction: str, ground_truths: list[str]) -> int:
    return int(
        any(oracle_normalize(prediction) == oracle_normalize(gt) for gt in ground_truths)
    )


def _oracle_f1_single(prediction: str, ground_truth: str) -> float:
    prediction_tokens = oracle_normalize(prediction).split()
    ground_truth_tokens = oracle_normalize(ground_truth).split()
    if not prediction_tokens and not ground_truth_tokens:
        return 1.0
    common = Counter(prediction_tokens) & Counter(ground_truth_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = 1.0 * num_same / len(prediction_tokens)
    recall = 1.0 * num_same / len(ground_truth_tokens)
    return (2 * precision * recall) / (precision + recall)


def oracle_f1(prediction: str, ground_truths: list[str]) -> float:
    return max(_oracle_f1_single(prediction, gt) for gt in ground_truths)


def oracle_cosine(sentences: list[str], a: str, b: str) -> float:
    """TFIDF cosine recomputed from the definition: tf = raw count,
    idf = ln((1+N)/(1+df)) + 1 over the sentence collection, L2-normalized."""
    docs = [oracle_normalize(s).split() for s in sentences]
    n = len(docs)

    def idf(term: str) -> float:
        df = sum(1 for doc in docs if term in doc)
        return math.log((1 + n) / (1 + df)) + 1.0

    def vector(text: str) -> dict[str, float]:
        counts = Counter(oracle_normalize(text).split())
        return {t: c * idf(t) for t, c in counts.items()}

    va, vb = vector(a), vector(b)
    na = math.sqrt(sum(w * w for w in va.values()))
    nb = math.sqrt(sum(w * w for w in vb.values()))
    if na == 0 or nb == 0:
        return 0.0
    dot = sum(w * vb.get(t, 0.0) for t, w in va.items())
    return dot / (na * nb)

"""A deterministic heuristic extractive reader.

Retrieves the context sentence most similar to the question (TFIDF cosine),
then keeps the longest stretch of that sentence that is not question words,
stopwords, or punctuation. It stands in for a trained model so the whole
diagnostic pipeline runs offline; external models plug in through the
predictions-file protocol instead.
"""

from __future__ import annotations

import json

from .squad_io import Dataset, Paragraph
from .text_analysis import (
    build_tfidf_model,
    normalize_answer,
    split_sentences,
    stopword_set,
    tfidf_similarity,
    tokenize,
)

# Mapping from question id to predicted answer string (the official
# predictions-file shape).
Predictions = dict[str, str]

DEFAULT_MAX_SPAN_TOKENS = 15


def _sentence_texts(paragraph: Paragraph) -> list[str]:
    return [paragraph.context[s.start : s.end] for s in split_sentences(paragraph.context)]


def _best_sentence(question: str, texts: list[str]) -> int:
    model = build_tfidf_model(texts)
    scores = [tfidf_similarity(model, question, t) for t in texts]
    return max(range(len(texts)), key=lambda i: (scores[i], -i))


def select_sentence(question: str, paragraph: Paragraph) -> int:
    """Index of the sentence most similar to the question; ties go to the
    smallest index."""
    return _best_sentence(question, _sentence_texts(paragraph))


def select_span(
    sentence: str, question: str, max_tokens: int = DEFAULT_MAX_SPAN_TOKENS
) -> str:
    """Candidate answer span from ``sentence``.

    Tokens whose normalized form appears in the question, is a stopword, or
    is empty (punctuation, articles) are filtered out; the longest contiguous
    surviving run wins (earliest on tie), capped at ``max_tokens`` tokens and
    returned with its original inter-token text. When nothing survives, the
    full sentence is returned so every question gets a prediction.
    """
    tokens = tokenize(sentence)
    if not tokens:
        return sentence
    stop = stopword_set()
    question_norms = {normalize_answer(t.text) for t in tokenize(question)}
    question_norms.discard("")

    def survives(text: str) -> bool:
        norm = normalize_answer(text)
        if not norm:
            return False
        if norm in question_norms:
            return False
        return text.lower() not in stop and norm not in stop

    best_start, best_len = 0, 0
    run_start, run_len = 0, 0
    for i, tok in enumerate(tokens):
        if survives(tok.text):
            if run_len == 0:
                run_start = i
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0
    if best_len == 0:
        return sentence
    run = tokens[best_start : best_start + min(best_len, max_tokens)]
    return sentence[run[0].start : run[-1].end]


def predict(dataset: Dataset, max_tokens: int = DEFAULT_MAX_SPAN_TOKENS) -> Predictions:
    """One predicted answer string per question, in document order.

    Pure function of the dataset: equal datasets give byte-identical
    predictions.
    """
    predictions: Predictions = {}
    for article in dataset.articles:
        for paragraph in article.paragraphs:
            texts = _sentence_texts(paragraph)
            for qa in paragraph.qas:
                best = _best_sentence(qa.question, texts)
                predictions[qa.id] = select_span(texts[best], qa.question, max_tokens)
    return predictions


def serialize_predictions(predictions: Predictions) -> bytes:
    """Official predictions JSON: a single ``{question_id: answer}`` object."""
    return json.dumps(predictions, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def parse_predictions(raw: bytes) -> Predictions:
    """Parse a predictions file, checking it is a string-to-string object."""
    obj = json.loads(raw.decode("utf-8"))
    if not isinstance(obj, dict):
        raise ValueError("predictions file must contain a JSON object")
    for key, value in obj.items():
        if not isinstance(value, str):
            raise ValueError(f"prediction for {key!r} must be a string")
    return obj

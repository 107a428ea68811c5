"""Standalone prediction adapter.

Deliberately self-contained: it talks to the diagnostic toolkit only through
the SQuAD dataset JSON it reads and the predictions JSON it writes, which is
exactly the contract an external model has to satisfy.

Exit codes: 0 success, 1 usage or model error, 2 dataset or coverage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

FALLBACK_MODEL = "fallback"


class BridgeError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class BridgeConfig:
    dataset_path: Path
    output_path: Path
    model: str = FALLBACK_MODEL
    batch_size: int = 16


@dataclass
class Question:
    qid: str
    question: str
    context: str


def load_questions(path: Path) -> list[Question]:
    if not path.is_file():
        raise BridgeError(f"dataset not found: {path}", 1)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BridgeError(f"cannot parse dataset {path}: {exc}", 2) from exc
    questions: list[Question] = []
    seen: set[str] = set()
    try:
        for article in doc["data"]:
            for paragraph in article["paragraphs"]:
                context = paragraph["context"]
                for qa in paragraph["qas"]:
                    qid = qa["id"]
                    if qid in seen:
                        raise BridgeError(f"duplicate question id {qid!r}", 2)
                    seen.add(qid)
                    questions.append(Question(qid, qa["question"], context))
    except (KeyError, TypeError) as exc:
        raise BridgeError(f"dataset {path} is not SQuAD-shaped: {exc}", 2) from exc
    return questions


# ---------------------------------------------------------------------------
# offline fallback model: answer with the most similar sentence
# ---------------------------------------------------------------------------

_SENTENCE_END = ".?!"


def _split_sentences(text: str) -> list[str]:
    sentences: list[str] = []
    start = 0
    for i, ch in enumerate(text):
        if ch in _SENTENCE_END and i + 1 < len(text) and text[i + 1] == " ":
            nxt = text[i + 2] if i + 2 < len(text) else ""
            if nxt.isupper():
                sentences.append(text[start : i + 1])
                start = i + 2
    sentences.append(text[start:])
    return [s for s in sentences if s.strip()] or [text]


def _terms(text: str) -> list[str]:
    cleaned = "".join(ch if ch.isalnum() else " " for ch in text.lower())
    return cleaned.split()


def _fallback_answers(batch: list[Question]) -> list[str]:
    answers = []
    for item in batch:
        sentences = _split_sentences(item.context)
        docs = [_terms(s) for s in sentences]
        n = len(docs)

        def idf(term: str) -> float:
            df = sum(1 for doc in docs if term in doc)
            return math.log((1 + n) / (1 + df)) + 1.0

        def vector(terms: list[str]) -> dict[str, float]:
            vec = {t: c * idf(t) for t, c in Counter(terms).items()}
            norm = math.sqrt(sum(w * w for w in vec.values()))
            return {t: w / norm for t, w in vec.items()} if norm else {}

        question_vec = vector(_terms(item.question))
        best_idx, best_score = 0, -1.0
        for idx, doc in enumerate(docs):
            doc_vec = vector(doc)
            score = sum(w * doc_vec.get(t, 0.0) for t, w in question_vec.items())
            if score > best_score:
                best_idx, best_score = idx, score
        answers.append(sentences[best_idx].strip())
    return answers


def _model_answers(batch: list[Question], pipeline) -> list[str]:
    answers = []
    for item in batch:
        if not item.question.strip():
            answers.append("")
            continue
        result = pipeline(question=item.question, context=item.context)
        answers.append(result["answer"] if isinstance(result, dict) else result[0]["answer"])
    return answers


def _load_pipeline(model: str):
    try:
        from transformers import pipeline
    except ImportError as exc:
        raise BridgeError(
            f"model {model!r} requested but transformers is not installed"
            " (pip install 'mrclens-bridge[model]')",
            1,
        ) from exc
    try:
        return pipeline("question-answering", model=model)
    except Exception as exc:
        raise BridgeError(f"cannot load model {model!r}: {exc}", 1) from exc


def predict_adapter(cfg: BridgeConfig) -> dict[str, str]:
    """Run the configured model over every question and write the predictions
    file; returns the prediction mapping."""
    questions = load_questions(cfg.dataset_path)
    qa_pipeline = None if cfg.model == FALLBACK_MODEL else _load_pipeline(cfg.model)

    predictions: dict[str, str] = {}
    for start in range(0, len(questions), cfg.batch_size):
        batch = questions[start : start + cfg.batch_size]
        if qa_pipeline is None:
            answers = _fallback_answers(batch)
        else:
            answers = _model_answers(batch, qa_pipeline)
        for item, answer in zip(batch, answers):
            predictions[item.qid] = answer

    uncovered = [q.qid for q in questions if q.qid not in predictions]
    if uncovered:
        shown = ", ".join(uncovered[:10]) + (", ..." if len(uncovered) > 10 else "")
        raise BridgeError(f"no prediction for {len(uncovered)} question id(s): {shown}", 2)

    cfg.output_path.parent.mkdir(parents=True, exist_ok=True)
    cfg.output_path.write_bytes(
        json.dumps(predictions, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    )
    return predictions


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mrclens-bridge",
        description="Emit official predictions JSON for a SQuAD-format dataset",
    )
    parser.add_argument("--dataset", required=True, help="SQuAD v1.1 JSON file")
    parser.add_argument("--out", required=True, help="predictions JSON to write")
    parser.add_argument(
        "--model",
        default=FALLBACK_MODEL,
        help="extractive QA model name/path, or 'fallback' for the offline model",
    )
    parser.add_argument("--batch-size", type=int, default=16)
    args = parser.parse_args(argv)

    cfg = BridgeConfig(
        dataset_path=Path(args.dataset),
        output_path=Path(args.out),
        model=args.model,
        batch_size=max(1, args.batch_size),
    )
    try:
        predictions = predict_adapter(cfg)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(f"wrote {len(predictions)} predictions -> {cfg.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

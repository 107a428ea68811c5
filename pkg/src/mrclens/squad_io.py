"""Parse, validate, serialize, and truncate SQuAD v1.1 datasets.

Answer offsets are counted in Unicode scalar values (Python string indices),
never bytes. All functions are pure; treat the returned objects as immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any


@dataclass
class Answer:
    text: str
    answer_start: int


@dataclass
class QA:
    id: str
    question: str
    answers: list[Answer]


@dataclass
class Paragraph:
    context: str
    qas: list[QA]


@dataclass
class Article:
    title: str
    paragraphs: list[Paragraph]


@dataclass
class Dataset:
    version: str
    articles: list[Article]

    def iter_qas(self):
        """Yield (article, paragraph, qa) in document order."""
        for article in self.articles:
            for paragraph in article.paragraphs:
                for qa in paragraph.qas:
                    yield article, paragraph, qa

    def question_count(self) -> int:
        return sum(1 for _ in self.iter_qas())

    def paragraph_count(self) -> int:
        return sum(len(a.paragraphs) for a in self.articles)


class ParseError(ValueError):
    """Input is not decodable UTF-8 JSON; carries the byte position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (byte position {position})")
        self.position = position


class SchemaError(ValueError):
    """Input JSON does not follow the SQuAD v1.1 schema; carries the JSON path."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{message} at {path}")
        self.path = path


class DuplicateIdError(ValueError):
    """The same question id occurs more than once."""

    def __init__(self, ids: list[str]):
        super().__init__(f"duplicate question ids: {', '.join(ids)}")
        self.ids = ids


@dataclass
class Violation:
    """One dataset integrity failure found by :func:`validate_dataset`."""

    kind: str  # "span_mismatch" or "duplicate_id"
    question_id: str
    message: str


def parse_dataset(raw: bytes) -> Dataset:
    """Parse raw SQuAD v1.1 JSON bytes into a :class:`Dataset`.

    Document order of articles, paragraphs, questions, and answers is
    preserved. Raises :class:`ParseError` for malformed input,
    :class:`SchemaError` for schema violations (including the v2.0
    ``is_impossible`` field, which is rejected), and
    :class:`DuplicateIdError` for repeated question ids.
    """
    try:
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    except UnicodeDecodeError as exc:
        raise ParseError("input is not valid UTF-8", exc.start) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        byte_pos = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON: {exc.msg}", byte_pos) from exc

    if not isinstance(obj, dict):
        raise SchemaError("top level must be an object", "$")
    version = _require(obj, "version", str, "$")
    data = _require(obj, "data", list, "$")

    articles: list[Article] = []
    for ai, raw_article in enumerate(data):
        apath = f"$.data[{ai}]"
        _check_type(raw_article, dict, apath)
        title = _require(raw_article, "title", str, apath)
        paragraphs: list[Paragraph] = []
        for pi, raw_para in enumerate(_require(raw_article, "paragraphs", list, apath)):
            ppath = f"{apath}.paragraphs[{pi}]"
            _check_type(raw_para, dict, ppath)
            context = _require(raw_para, "context", str, ppath)
            if not context:
                raise SchemaError("context must be non-empty", ppath + ".context")
            qas: list[QA] = []
            for qi, raw_qa in enumerate(_require(raw_para, "qas", list, ppath)):
                qpath = f"{ppath}.qas[{qi}]"
                _check_type(raw_qa, dict, qpath)
                if "is_impossible" in raw_qa:
                    raise SchemaError(
                        "'is_impossible' found: SQuAD v2.0 input is not supported,"
                        " expected v1.1",
                        qpath,
                    )
                qid = _require(raw_qa, "id", str, qpath)
                question = _require(raw_qa, "question", str, qpath)
                raw_answers = _require(raw_qa, "answers", list, qpath)
                if not raw_answers:
                    raise SchemaError("answers must be non-empty", qpath + ".answers")
                answers: list[Answer] = []
                for ni, raw_answer in enumerate(raw_answers):
                    npath = f"{qpath}.answers[{ni}]"
                    _check_type(raw_answer, dict, npath)
                    atext = _require(raw_answer, "text", str, npath)
                    start = _require(raw_answer, "answer_start", int, npath)
                    if start < 0:
                        raise SchemaError(
                            "answer_start must be non-negative", npath + ".answer_start"
                        )
                    answers.append(Answer(atext, start))
                qas.append(QA(qid, question, answers))
            paragraphs.append(Paragraph(context, qas))
        articles.append(Article(title, paragraphs))

    dataset = Dataset(version, articles)
    duplicates = _duplicate_ids(dataset)
    if duplicates:
        raise DuplicateIdError(duplicates)
    return dataset


def _require(obj: dict, key: str, expected: type, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"missing required key '{key}'", path)
    value = obj[key]
    if expected is int and isinstance(value, bool):
        raise SchemaError(f"key '{key}' must be an integer, got bool", f"{path}.{key}")
    if not isinstance(value, expected):
        raise SchemaError(
            f"key '{key}' must be {expected.__name__}, got {type(value).__name__}",
            f"{path}.{key}",
        )
    return value


def _check_type(value: Any, expected: type, path: str) -> None:
    if not isinstance(value, expected):
        raise SchemaError(
            f"expected {expected.__name__}, got {type(value).__name__}", path
        )


def serialize_dataset(dataset: Dataset) -> bytes:
    """Serialize to SQuAD v1.1 JSON bytes.

    Key order is fixed (version, data / title, paragraphs / context, qas /
    id, question, answers / text, answer_start), output is compact UTF-8 with
    no insignificant whitespace, so structurally equal datasets serialize to
    identical bytes and ``parse_dataset(serialize_dataset(d)) == d``.
    """
    payload = {
        "version": dataset.version,
        "data": [
            {
                "title": article.title,
                "paragraphs": [
                    {
                        "context": paragraph.context,
                        "qas": [
                            {
                                "id": qa.id,
                                "question": qa.question,
                                "answers": [
                                    {"text": a.text, "answer_start": a.answer_start}
                                    for a in qa.answers
                                ],
                            }
                            for qa in paragraph.qas
                        ],
                    }
                    for paragraph in article.paragraphs
                ],
            }
            for article in dataset.articles
        ],
    }
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def _duplicate_ids(dataset: Dataset) -> list[str]:
    seen: set[str] = set()
    duplicates: list[str] = []
    for _, _, qa in dataset.iter_qas():
        if qa.id in seen:
            duplicates.append(qa.id)
        else:
            seen.add(qa.id)
    return duplicates


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Integrity check: one violation per answer whose span does not match its
    context substring, plus one per extra occurrence of a duplicate question
    id. An empty list means the dataset is valid."""
    violations: list[Violation] = []
    for dup in _duplicate_ids(dataset):
        violations.append(
            Violation("duplicate_id", dup, f"question id '{dup}' occurs more than once")
        )
    for _, paragraph, qa in dataset.iter_qas():
        for answer in qa.answers:
            end = answer.answer_start + len(answer.text)
            found = paragraph.context[answer.answer_start : end]
            if found != answer.text:
                violations.append(
                    Violation(
                        "span_mismatch",
                        qa.id,
                        f"answer text {answer.text!r} not at offset "
                        f"{answer.answer_start} (found {found!r})",
                    )
                )
    return violations


def truncate_dataset(dataset: Dataset) -> Dataset:
    """Keep only the first question of every paragraph, dropping paragraphs
    that have none. Idempotent; afterwards question count equals retained
    paragraph count."""
    articles = []
    for article in dataset.articles:
        paragraphs = [
            Paragraph(p.context, [p.qas[0]]) for p in article.paragraphs if p.qas
        ]
        articles.append(Article(article.title, paragraphs))
    return Dataset(dataset.version, articles)

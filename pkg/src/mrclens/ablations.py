"""The eight dataset perturbations, each targeting one bias.

Three bias families are covered: similarity between the question and context
sentences (e1-e3), information carried by the question alone (e4-e5), and
shared keywords between question and context (e6-e8). Every transformation
is offset-preserving — answer spans in the output always match their context
substring — and every question gets an audit record saying what happened.

Randomness is per question: each QA's choices depend only on
``(global_seed, question_id)``, so outputs are identical no matter how the
work is ordered or parallelized. Sentence shuffling is the one per-paragraph
operation; it seeds from the paragraph's first question id.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .squad_io import Answer, Article, Dataset, Paragraph, QA
from .text_analysis import (
    SeededRng,
    derive_seed,
    extract_interrogatives,
    extract_keywords,
    PosClass,
    shuffled_indices,
    split_sentences,
    tokenize,
)


class AblationId(Enum):
    E1 = "e1"
    E2 = "e2"
    E3 = "e3"
    E4 = "e4"
    E5 = "e5"
    E6 = "e6"
    E7 = "e7"
    E8 = "e8"


class BiasCategory(Enum):
    SIMILARITY = "similarity"
    QUESTION = "question"
    KEYWORD = "keyword"


class Mutates(Enum):
    CONTEXT = "context"
    QUESTION = "question"


class SkipReason(Enum):
    NO_ELIGIBLE_SENTENCE = "no_eligible_sentence"
    EMPTY_PAYLOAD = "empty_payload"
    ANSWER_CROSSES_SENTENCE_BOUNDARY = "answer_crosses_sentence_boundary"


class QuestionRewrite(Enum):
    INTERROGATIVES_ONLY = "interrogatives_only"
    SHUFFLE_WORDS = "shuffle_words"


@dataclass(frozen=True)
class AblationSpec:
    id: AblationId
    category: BiasCategory
    requires_truncated: bool
    ablated_information: str
    mutates: Mutates


ABLATIONS: dict[AblationId, AblationSpec] = {
    spec.id: spec
    for spec in (
        AblationSpec(
            AblationId.E1,
            BiasCategory.SIMILARITY,
            True,
            "reliability of question-to-sentence similarity: a copy of the full"
            " question makes a non-answer sentence the most similar one",
            Mutates.CONTEXT,
        ),
        AblationSpec(
            AblationId.E2,
            BiasCategory.SIMILARITY,
            True,
            "reliability of question-to-sentence similarity: half the question"
            " tokens raise a non-answer sentence's similarity",
            Mutates.CONTEXT,
        ),
        AblationSpec(
            AblationId.E3,
            BiasCategory.SIMILARITY,
            False,
            "inter-sentence ordering and cross-sentence context",
            Mutates.CONTEXT,
        ),
        AblationSpec(
            AblationId.E4,
            BiasCategory.QUESTION,
            False,
            "all question content except interrogative words",
            Mutates.QUESTION,
        ),
        AblationSpec(
            AblationId.E5,
            BiasCategory.QUESTION,
            False,
            "word order within the question",
            Mutates.QUESTION,
        ),
        AblationSpec(
            AblationId.E6,
            BiasCategory.KEYWORD,
            True,
            "keyword locality: question nouns copied next to a non-answer sentence",
            Mutates.CONTEXT,
        ),
        AblationSpec(
            AblationId.E7,
            BiasCategory.KEYWORD,
            True,
            "keyword locality: question verbs copied next to a non-answer sentence",
            Mutates.CONTEXT,
        ),
        AblationSpec(
            AblationId.E8,
            BiasCategory.KEYWORD,
            True,
            "keyword locality: question adjectives copied next to a non-answer"
            " sentence",
            Mutates.CONTEXT,
        ),
    )
}

_KEYWORD_CLASS = {
    AblationId.E6: PosClass.NOUN,
    AblationId.E7: PosClass.VERB,
    AblationId.E8: PosClass.ADJECTIVE,
}

_INSERTION_IDS = frozenset(
    {AblationId.E1, AblationId.E2, AblationId.E6, AblationId.E7, AblationId.E8}
)


class TruncationRequiredError(ValueError):
    """Raised when an insertion ablation is applied to a dataset where some
    paragraph does not have exactly one question; run truncation first."""

    def __init__(self, ablation: AblationId):
        super().__init__(
            f"{ablation.value} requires a truncated dataset (exactly one question"
            " per paragraph); run the truncate step first"
        )
        self.ablation = ablation


@dataclass
class PerturbationRecord:
    """Audit record for one question: what the perturbation did and why.

    ``applied`` is true exactly when ``skip_reason`` is absent. For the
    interrogatives-only rewrite, a question with no interrogative words is
    still rewritten (to the empty string); the record then shows
    ``inserted_text == ""`` rather than a skip.
    """

    question_id: str
    applied: bool
    seed: int
    target_sentence_index: int | None = None
    inserted_text: str | None = None
    skip_reason: SkipReason | None = None

    def to_json_obj(self) -> dict:
        return {
            "question_id": self.question_id,
            "applied": self.applied,
            "seed": self.seed,
            "target_sentence_index": self.target_sentence_index,
            "inserted_text": self.inserted_text,
            "skip_reason": self.skip_reason.value if self.skip_reason else None,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PerturbationRecord":
        return cls(
            question_id=obj["question_id"],
            applied=obj["applied"],
            seed=obj["seed"],
            target_sentence_index=obj.get("target_sentence_index"),
            inserted_text=obj.get("inserted_text"),
            skip_reason=SkipReason(obj["skip_reason"]) if obj.get("skip_reason") else None,
        )


def records_to_jsonl(records: list[PerturbationRecord]) -> bytes:
    """One JSON object per line, in document order."""
    lines = [
        json.dumps(r.to_json_obj(), ensure_ascii=False, separators=(",", ":"))
        for r in records
    ]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def parse_records_jsonl(raw: bytes) -> list[PerturbationRecord]:
    return [
        PerturbationRecord.from_json_obj(json.loads(line))
        for line in raw.decode("utf-8").splitlines()
        if line.strip()
    ]


# ---------------------------------------------------------------------------
# primitive transformations
# ---------------------------------------------------------------------------


def eligible_sentences(paragraph: Paragraph, qa: QA) -> list[int]:
    """Indices of sentences that overlap no gold answer span of ``qa``."""
    spans = split_sentences(paragraph.context)
    eligible = []
    for idx, span in enumerate(spans):
        overlaps = any(
            a.answer_start < span.end and span.start < a.answer_start + len(a.text)
            for a in qa.answers
        )
        if not overlaps:
            eligible.append(idx)
    return eligible


def insert_before_sentence(paragraph: Paragraph, idx: int, payload: str) -> Paragraph:
    """Insert ``payload`` plus one space at the start of sentence ``idx``,
    shifting every answer at or past that offset by ``len(payload) + 1``.

    Callers must pick ``idx`` so that no answer straddles the insertion point
    (eligible_sentences guarantees this)."""
    if not payload:
        raise ValueError("payload must be non-empty")
    spans = split_sentences(paragraph.context)
    pos = spans[idx].start
    shift = len(payload) + 1
    context = paragraph.context[:pos] + payload + " " + paragraph.context[pos:]
    qas = [
        QA(
            qa.id,
            qa.question,
            [
                Answer(a.text, a.answer_start + shift if a.answer_start >= pos else a.answer_start)
                for a in qa.answers
            ],
        )
        for qa in paragraph.qas
    ]
    return Paragraph(context, qas)


def answers_within_sentences(paragraph: Paragraph) -> bool:
    """True when every gold answer of every question lies inside a single
    sentence (the precondition for shuffling sentence order)."""
    spans = split_sentences(paragraph.context)
    for qa in paragraph.qas:
        for answer in qa.answers:
            end = answer.answer_start + len(answer.text)
            if not any(s.start <= answer.answer_start and end <= s.end for s in spans):
                return False
    return True


def shuffle_paragraph_sentences(paragraph: Paragraph, seed: int) -> Paragraph:
    """Permute sentence order with a seeded Fisher-Yates shuffle, rejoin with
    single spaces, and remap every answer offset into its moved sentence.

    Precondition: :func:`answers_within_sentences` holds; callers with
    boundary-crossing answers must skip the paragraph instead."""
    spans = split_sentences(paragraph.context)
    n = len(spans)
    order = shuffled_indices(n, SeededRng(seed))  # order[new_pos] = old index
    texts = [paragraph.context[s.start : s.end] for s in spans]
    new_context = " ".join(texts[old] for old in order)

    new_start_of_old = {}
    offset = 0
    for new_pos, old in enumerate(order):
        new_start_of_old[old] = offset
        offset += len(texts[old]) + 1

    qas = []
    for qa in paragraph.qas:
        answers = []
        for a in qa.answers:
            end = a.answer_start + len(a.text)
            home = next(
                i for i, s in enumerate(spans) if s.start <= a.answer_start and end <= s.end
            )
            new_start = new_start_of_old[home] + (a.answer_start - spans[home].start)
            answers.append(Answer(a.text, new_start))
        qas.append(QA(qa.id, qa.question, answers))
    return Paragraph(new_context, qas)


def rewrite_question(qa: QA, mode: QuestionRewrite, seed: int) -> QA:
    """Rewrite the question text; context and answers are untouched.

    INTERROGATIVES_ONLY keeps only interrogative words (possibly none,
    yielding an empty question). SHUFFLE_WORDS permutes all question tokens,
    punctuation included, with the seeded shuffle. Both join with single
    spaces."""
    if mode is QuestionRewrite.INTERROGATIVES_ONLY:
        new_question = " ".join(extract_interrogatives(qa.question))
    else:
        tokens = [t.text for t in tokenize(qa.question)]
        order = shuffled_indices(len(tokens), SeededRng(seed))
        new_question = " ".join(tokens[old] for old in order)
    return QA(qa.id, new_question, list(qa.answers))


def half_question(question: str, side: str = "first") -> str:
    """The first (or last) ceil(n/2) question tokens, joined by spaces."""
    tokens = [t.text for t in tokenize(question)]
    keep = math.ceil(len(tokens) / 2)
    kept = tokens[:keep] if side == "first" else tokens[len(tokens) - keep :]
    return " ".join(kept)


# ---------------------------------------------------------------------------
# whole-dataset application
# ---------------------------------------------------------------------------


def apply_ablation(
    dataset: Dataset,
    ablation: AblationId,
    global_seed: int,
    half: str = "first",
) -> tuple[Dataset, list[PerturbationRecord]]:
    """Apply one ablation to every question, returning the perturbed dataset
    and one audit record per question in document order.

    Degenerate questions (no eligible sentence, empty keyword payload, answer
    crossing a sentence boundary) are left unchanged and flagged, never
    errors, so whole-dataset runs always complete. Raises
    :class:`TruncationRequiredError` when an insertion ablation meets a
    paragraph without exactly one question.
    """
    spec = ABLATIONS[ablation]
    if spec.requires_truncated:
        for article in dataset.articles:
            for paragraph in article.paragraphs:
                if len(paragraph.qas) != 1:
                    raise TruncationRequiredError(ablation)

    records: list[PerturbationRecord] = []
    articles = []
    for article in dataset.articles:
        paragraphs = []
        for paragraph in article.paragraphs:
            if ablation in _INSERTION_IDS:
                paragraphs.append(_apply_insertion(paragraph, spec, global_seed, half, records))
            elif ablation is AblationId.E3:
                paragraphs.append(_apply_sentence_shuffle(paragraph, global_seed, records))
            else:
                paragraphs.append(_apply_question_rewrite(paragraph, ablation, global_seed, records))
        articles.append(Article(article.title, paragraphs))
    return Dataset(dataset.version, articles), records


def _apply_insertion(
    paragraph: Paragraph,
    spec: AblationSpec,
    global_seed: int,
    half: str,
    records: list[PerturbationRecord],
) -> Paragraph:
    qa = paragraph.qas[0]
    seed = derive_seed(global_seed, qa.id)
    if spec.id is AblationId.E1:
        payload = qa.question
    elif spec.id is AblationId.E2:
        payload = half_question(qa.question, half)
    else:
        payload = " ".join(extract_keywords(qa.question, _KEYWORD_CLASS[spec.id]))
    eligible = eligible_sentences(paragraph, qa)
    if not eligible:
        records.append(
            PerturbationRecord(qa.id, False, seed, skip_reason=SkipReason.NO_ELIGIBLE_SENTENCE)
        )
        return paragraph
    if not payload:
        records.append(
            PerturbationRecord(qa.id, False, seed, skip_reason=SkipReason.EMPTY_PAYLOAD)
        )
        return paragraph
    target = eligible[SeededRng(seed).below(len(eligible))]
    records.append(
        PerturbationRecord(qa.id, True, seed, target_sentence_index=target, inserted_text=payload)
    )
    return insert_before_sentence(paragraph, target, payload)


def _apply_sentence_shuffle(
    paragraph: Paragraph, global_seed: int, records: list[PerturbationRecord]
) -> Paragraph:
    if not paragraph.qas:
        return paragraph
    # One shuffle per paragraph, seeded from its first question id.
    seed = derive_seed(global_seed, paragraph.qas[0].id)
    if not answers_within_sentences(paragraph):
        records.extend(
            PerturbationRecord(
                qa.id, False, seed, skip_reason=SkipReason.ANSWER_CROSSES_SENTENCE_BOUNDARY
            )
            for qa in paragraph.qas
        )
        return paragraph
    records.extend(PerturbationRecord(qa.id, True, seed) for qa in paragraph.qas)
    return shuffle_paragraph_sentences(paragraph, seed)


def _apply_question_rewrite(
    paragraph: Paragraph,
    ablation: AblationId,
    global_seed: int,
    records: list[PerturbationRecord],
) -> Paragraph:
    mode = (
        QuestionRewrite.INTERROGATIVES_ONLY
        if ablation is AblationId.E4
        else QuestionRewrite.SHUFFLE_WORDS
    )
    qas = []
    for qa in paragraph.qas:
        seed = derive_seed(global_seed, qa.id)
        new_qa = rewrite_question(qa, mode, seed)
        inserted = new_qa.question if mode is QuestionRewrite.INTERROGATIVES_ONLY else None
        records.append(PerturbationRecord(qa.id, True, seed, inserted_text=inserted))
        qas.append(new_qa)
    return Paragraph(paragraph.context, qas)

from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from corpus import make_fixture_dataset, make_synthetic_dataset
from test_squad_io import small_datasets

from mrclens.ablations import (
    ABLATIONS,
    AblationId,
    BiasCategory,
    PerturbationRecord,
    QuestionRewrite,
    SkipReason,
    TruncationRequiredError,
    answers_within_sentences,
    apply_ablation,
    eligible_sentences,
    half_question,
    insert_before_sentence,
    parse_records_jsonl,
    records_to_jsonl,
    rewrite_question,
    shuffle_paragraph_sentences,
)
from mrclens.squad_io import (
    Answer,
    Article,
    Dataset,
    Paragraph,
    QA,
    serialize_dataset,
    truncate_dataset,
    validate_dataset,
)
from mrclens.text_analysis import SeededRng, shuffled_indices, split_sentences, tokenize

INSERTION_IDS = [a for a in AblationId if ABLATIONS[a].requires_truncated]
FULL_REGIME_IDS = [a for a in AblationId if not ABLATIONS[a].requires_truncated]


def single(context, question, answers, qid="q1"):
    return Paragraph(context, [QA(qid, question, answers)])


def wrap(paragraph):
    return Dataset("1.1", [Article("T", [paragraph])])


class TestRegistry:
    def test_category_mapping(self):
        expected = {
            AblationId.E1: BiasCategory.SIMILARITY,
            AblationId.E2: BiasCategory.SIMILARITY,
            AblationId.E3: BiasCategory.SIMILARITY,
            AblationId.E4: BiasCategory.QUESTION,
            AblationId.E5: BiasCategory.QUESTION,
            AblationId.E6: BiasCategory.KEYWORD,
            AblationId.E7: BiasCategory.KEYWORD,
            AblationId.E8: BiasCategory.KEYWORD,
        }
        assert {a: s.category for a, s in ABLATIONS.items()} == expected

    def test_truncation_flags(self):
        assert set(INSERTION_IDS) == {
            AblationId.E1,
            AblationId.E2,
            AblationId.E6,
            AblationId.E7,
            AblationId.E8,
        }


class TestEligibleSentences:
    def test_answer_in_first_sentence(self):
        p = single("Rust is fast. Go is simple.", "What is fast?", [Answer("Rust", 0)])
        assert eligible_sentences(p, p.qas[0]) == [1]

    def test_single_sentence_containing_answer(self):
        p = single("Rust is fast.", "What is fast?", [Answer("Rust", 0)])
        assert eligible_sentences(p, p.qas[0]) == []

    def test_two_golds_leave_middle_sentence(self):
        context = "Alpha leads today. Bravo follows close. Alpha rests tonight."
        p = single(
            context,
            "Who leads?",
            [Answer("Alpha", 0), Answer("Alpha", context.index("Alpha", 10))],
        )
        assert eligible_sentences(p, p.qas[0]) == [1]

    def test_boundary_crossing_answer_blocks_both_sentences(self):
        p = single(
            "The vault failed badly. Retry began Monday.",
            "What failed?",
            [Answer("badly. Retry", 16)],
        )
        assert eligible_sentences(p, p.qas[0]) == []


class TestInsertBeforeSentence:
    def test_insert_after_answer_keeps_offset(self):
        p = single("Rust is fast. Go is simple.", "What is fast?", [Answer("Rust", 0)])
        out = insert_before_sentence(p, 1, "What is fast?")
        assert out.context == "Rust is fast. What is fast? Go is simple."
        assert out.qas[0].answers[0].answer_start == 0
        assert validate_dataset(wrap(out)) == []

    def test_insert_before_answer_shifts_offset(self):
        p = single("Go is simple. Rust is fast.", "What is fast?", [Answer("Rust", 14)])
        out = insert_before_sentence(p, 0, "What is fast?")
        assert out.context == "What is fast? Go is simple. Rust is fast."
        assert out.qas[0].answers[0].answer_start == 28
        assert validate_dataset(wrap(out)) == []

    def test_empty_payload_rejected(self):
        p = single("Rust is fast. Go is simple.", "Q?", [Answer("Rust", 0)])
        with pytest.raises(ValueError):
            insert_before_sentence(p, 1, "")


class TestShuffleParagraphSentences:
    def test_single_sentence_fixed_point(self):
        p = single("Rust is fast.", "What is fast?", [Answer("Rust", 0)])
        assert shuffle_paragraph_sentences(p, 123) == p

    def test_two_sentence_swap(self):
        # seed 2 drives the Fisher-Yates swap (1, 0) for two elements
        assert shuffled_indices(2, SeededRng(2)) == [1, 0]
        p = single("Rust is fast. Go is simple.", "What is fast?", [Answer("Rust", 0)])
        out = shuffle_paragraph_sentences(p, 2)
        assert out.context == "Go is simple. Rust is fast."
        assert out.qas[0].answers[0].answer_start == 14
        assert validate_dataset(wrap(out)) == []

    def test_multiset_preserved(self):
        p = make_fixture_dataset().articles[0].paragraphs[0]
        for seed in range(25):
            out = shuffle_paragraph_sentences(p, seed)
            assert sorted(sentence_texts(out)) == sorted(sentence_texts(p))
            assert validate_dataset(wrap(out)) == []

    def test_answers_within_sentences_detects_crossing(self):
        crossing = single(
            "The vault failed badly. Retry began Monday.",
            "What failed?",
            [Answer("badly. Retry", 16)],
        )
        fine = single("Rust is fast. Go is simple.", "Q?", [Answer("Rust", 0)])
        assert not answers_within_sentences(crossing)
        assert answers_within_sentences(fine)


def sentence_texts(paragraph):
    return [paragraph.context[s.start : s.end] for s in split_sentences(paragraph.context)]


def resplit_recovers_boundaries(paragraph):
    """True when every sentence ends with a terminator and opens with an
    uppercase letter or quote, so splitting the rejoined text finds the same
    boundaries again."""
    texts = sentence_texts(paragraph)
    return all(t and t[-1] in ".?!" for t in texts) and all(
        t[0].isupper() or t[0] in "\"'“‘«" for t in texts
    )


class TestRewriteQuestion:
    def test_interrogatives_only(self):
        qa = QA("q1", "In what year did the war end?", [Answer("x", 0)])
        out = rewrite_question(qa, QuestionRewrite.INTERROGATIVES_ONLY, 0)
        assert out.question == "what"
        assert out.answers == qa.answers and out.id == qa.id

    def test_no_interrogatives_empties_question(self):
        qa = QA("q1", "Name the capital.", [Answer("x", 0)])
        out = rewrite_question(qa, QuestionRewrite.INTERROGATIVES_ONLY, 0)
        assert out.question == ""

    def test_single_token_shuffle_is_identity(self):
        qa = QA("q1", "Why", [Answer("x", 0)])
        assert rewrite_question(qa, QuestionRewrite.SHUFFLE_WORDS, 7).question == "Why"

    @settings(max_examples=80)
    @given(st.integers(0, 2**63))
    def test_shuffle_preserves_token_multiset(self, seed):
        qa = QA("q1", "What is fast and light?", [Answer("x", 0)])
        out = rewrite_question(qa, QuestionRewrite.SHUFFLE_WORDS, seed)
        assert Counter(out.question.split(" ")) == Counter(
            t.text for t in tokenize(qa.question)
        )


class TestHalfQuestion:
    def test_first_half_keeps_ceiling(self):
        # 4 tokens -> first 2
        assert half_question("What is fast?") == "What is"

    def test_odd_token_count(self):
        # 5 tokens -> first 3
        assert half_question("When did the war end") == "When did the"

    def test_last_half(self):
        assert half_question("What is fast?", side="last") == "fast ?"


FIXTURE_E1 = single("Rust is fast. Go is simple.", "What is fast?", [Answer("Rust", 0)])


class TestApplyAblation:
    def test_e1_inserts_full_question(self):
        out, records = apply_ablation(wrap(FIXTURE_E1), AblationId.E1, 42)
        p = out.articles[0].paragraphs[0]
        assert p.context == "Rust is fast. What is fast? Go is simple."
        assert records == [
            PerturbationRecord(
                "q1",
                True,
                records[0].seed,
                target_sentence_index=1,
                inserted_text="What is fast?",
            )
        ]

    def test_e4_keeps_interrogatives(self):
        out, records = apply_ablation(wrap(FIXTURE_E1), AblationId.E4, 42)
        p = out.articles[0].paragraphs[0]
        assert p.qas[0].question == "What"
        assert p.context == FIXTURE_E1.context
        assert records[0].applied and records[0].inserted_text == "What"

    def test_e4_no_interrogatives_applies_with_empty_payload(self):
        p = single("The bridge spans the Arno. It was rebuilt.", "Name the bridge.", [Answer("Arno", 21)])
        out, records = apply_ablation(wrap(p), AblationId.E4, 42)
        assert out.articles[0].paragraphs[0].qas[0].question == ""
        assert records[0].applied and records[0].inserted_text == ""

    def test_e6_skips_single_sentence_paragraph(self):
        p = single("Rust is fast.", "What is fast?", [Answer("Rust", 0)])
        out, records = apply_ablation(wrap(p), AblationId.E6, 42)
        assert out == wrap(p)
        assert records[0].skip_reason is SkipReason.NO_ELIGIBLE_SENTENCE
        assert not records[0].applied

    def test_e6_skips_empty_keyword_payload(self):
        p = single(
            "He trains falcons by the cliffs. The cliffs face west.",
            "Who is he?",
            [Answer("falcons", 10)],
        )
        out, records = apply_ablation(wrap(p), AblationId.E6, 42)
        assert records[0].skip_reason is SkipReason.EMPTY_PAYLOAD
        assert out == wrap(p)

    def test_e3_skips_boundary_crossing_answers(self):
        p = single(
            "The vault failed badly. Retry began Monday.",
            "What failed?",
            [Answer("badly. Retry", 16)],
        )
        out, records = apply_ablation(wrap(p), AblationId.E3, 42)
        assert out == wrap(p)
        assert records[0].skip_reason is SkipReason.ANSWER_CROSSES_SENTENCE_BOUNDARY

    def test_truncation_required(self):
        p = Paragraph(
            "Rust is fast. Go is simple.",
            [
                QA("q1", "What is fast?", [Answer("Rust", 0)]),
                QA("q2", "What is simple?", [Answer("Go", 14)]),
            ],
        )
        for ablation in INSERTION_IDS:
            with pytest.raises(TruncationRequiredError):
                apply_ablation(wrap(p), ablation, 42)

    def test_e2_half_side_changes_payload(self):
        out_first, rec_first = apply_ablation(wrap(FIXTURE_E1), AblationId.E2, 42, half="first")
        out_last, rec_last = apply_ablation(wrap(FIXTURE_E1), AblationId.E2, 42, half="last")
        assert rec_first[0].inserted_text == "What is"
        assert rec_last[0].inserted_text == "fast ?"
        assert out_first != out_last

    @pytest.mark.parametrize("ablation", list(AblationId))
    def test_offset_integrity_on_fixture_corpus(self, ablation):
        dataset = make_fixture_dataset()
        base = truncate_dataset(dataset) if ABLATIONS[ablation].requires_truncated else dataset
        out, records = apply_ablation(base, ablation, 42)
        assert validate_dataset(out) == []
        assert len(records) == base.question_count()

    @pytest.mark.parametrize("ablation", list(AblationId))
    def test_record_consistency(self, ablation):
        dataset = make_fixture_dataset()
        base = truncate_dataset(dataset) if ABLATIONS[ablation].requires_truncated else dataset
        _, records = apply_ablation(base, ablation, 42)
        applied = sum(1 for r in records if r.applied)
        skipped = sum(1 for r in records if r.skip_reason is not None)
        assert applied + skipped == len(records)
        for record in records:
            assert record.applied == (record.skip_reason is None)
            if record.target_sentence_index is not None:
                assert ablation in set(INSERTION_IDS)

    @pytest.mark.parametrize("ablation", [AblationId.E4, AblationId.E5])
    def test_question_rewrites_leave_context(self, ablation):
        dataset = make_fixture_dataset()
        out, _ = apply_ablation(dataset, ablation, 42)
        for (_, p_out, qa_out), (_, p_in, qa_in) in zip(out.iter_qas(), dataset.iter_qas()):
            assert p_out.context == p_in.context
            assert qa_out.answers == qa_in.answers

    @pytest.mark.parametrize("ablation", INSERTION_IDS + [AblationId.E3])
    def test_context_mutations_leave_questions(self, ablation):
        dataset = make_fixture_dataset()
        base = truncate_dataset(dataset) if ABLATIONS[ablation].requires_truncated else dataset
        out, _ = apply_ablation(base, ablation, 42)
        for (_, _, qa_out), (_, _, qa_in) in zip(out.iter_qas(), base.iter_qas()):
            assert qa_out.question == qa_in.question

    def test_e3_preserves_sentence_multiset(self):
        dataset = make_fixture_dataset()
        out, records = apply_ablation(dataset, AblationId.E3, 42)
        skipped_ids = {r.question_id for r in records if not r.applied}
        for (_, p_out, qa), (_, p_in, _) in zip(out.iter_qas(), dataset.iter_qas()):
            if qa.id in skipped_ids:
                assert p_out.context == p_in.context
            elif resplit_recovers_boundaries(p_in):
                assert sorted(sentence_texts(p_out)) == sorted(sentence_texts(p_in))
            else:
                # boundaries without a terminator/uppercase cue vanish when
                # rejoined; the word multiset is still preserved
                assert sorted(p_out.context.split(" ")) == sorted(p_in.context.split(" "))

    def test_e5_preserves_question_tokens(self):
        dataset = make_fixture_dataset()
        out, _ = apply_ablation(dataset, AblationId.E5, 42)
        for (_, _, qa_out), (_, _, qa_in) in zip(out.iter_qas(), dataset.iter_qas()):
            assert Counter(qa_out.question.split(" ")) == Counter(
                t.text for t in tokenize(qa_in.question)
            )

    @pytest.mark.parametrize("ablation", list(AblationId))
    def test_deterministic_across_runs(self, ablation):
        dataset = make_fixture_dataset()
        base = truncate_dataset(dataset) if ABLATIONS[ablation].requires_truncated else dataset
        out1, rec1 = apply_ablation(base, ablation, 42)
        out2, rec2 = apply_ablation(base, ablation, 42)
        assert serialize_dataset(out1) == serialize_dataset(out2)
        assert rec1 == rec2

    def test_seed_changes_output(self):
        dataset = truncate_dataset(make_fixture_dataset())
        out42, _ = apply_ablation(dataset, AblationId.E1, 42)
        out43, _ = apply_ablation(dataset, AblationId.E1, 43)
        assert serialize_dataset(out42) != serialize_dataset(out43)

    @pytest.mark.parametrize("ablation", list(AblationId))
    def test_paragraph_order_does_not_matter(self, ablation):
        dataset = make_synthetic_dataset(12, seed=5)
        base = truncate_dataset(dataset) if ABLATIONS[ablation].requires_truncated else dataset
        out, _ = apply_ablation(base, ablation, 42)
        by_id = {p.qas[0].id: p for a in out.articles for p in a.paragraphs}

        reversed_base = Dataset(
            base.version,
            [Article(a.title, list(reversed(a.paragraphs))) for a in base.articles],
        )
        out_rev, _ = apply_ablation(reversed_base, ablation, 42)
        for article in out_rev.articles:
            for p in article.paragraphs:
                assert p == by_id[p.qas[0].id]


class TestRecordsJsonl:
    def test_round_trip(self):
        dataset = truncate_dataset(make_fixture_dataset())
        _, records = apply_ablation(dataset, AblationId.E1, 42)
        assert parse_records_jsonl(records_to_jsonl(records)) == records

    def test_empty(self):
        assert records_to_jsonl([]) == b""
        assert parse_records_jsonl(b"") == []


@settings(max_examples=120, deadline=None)
@given(small_datasets())
def test_offset_integrity_fuzz(dataset):
    truncated = truncate_dataset(dataset)
    for ablation in AblationId:
        base = truncated if ABLATIONS[ablation].requires_truncated else dataset
        perturbed, records = apply_ablation(base, ablation, 7)
        assert validate_dataset(perturbed) == [], ablation
        assert len(records) == base.question_count()
        for record in records:
            assert record.applied == (record.skip_reason is None)

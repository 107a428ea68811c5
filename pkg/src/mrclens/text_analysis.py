"""Deterministic text primitives shared by the whole toolkit.

Tokenization, sentence splitting, answer normalization, TFIDF similarity,
coarse part-of-speech tagging, keyword/interrogative extraction, and the
seeded random generator that drives every shuffle. Nothing here depends on
locale, platform, or learned components, so identical inputs produce
identical outputs everywhere. The tagger, stopword, and abbreviation data
ship as plain-text files under ``mrclens/data/``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cache
from importlib import resources

_MASK64 = (1 << 64) - 1

INTERROGATIVES = frozenset(
    {"what", "which", "who", "whom", "whose", "when", "where", "why", "how"}
)

# ASCII punctuation removed by answer normalization, matching the official
# SQuAD v1.1 evaluation behavior (string.punctuation).
_NORM_PUNCT = frozenset("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~")
_ARTICLES = frozenset({"a", "an", "the"})

_TERMINATORS = frozenset(".?!")
_OPENERS = frozenset("\"'“‘«")  # straight/typographic opening quotes


# ---------------------------------------------------------------------------
# spans and tokenization
# ---------------------------------------------------------------------------


@dataclass
class TokenSpan:
    """A token plus its [start, end) character offsets into the source string."""

    text: str
    start: int
    end: int


@dataclass
class SentenceSpan:
    """[start, end) character offsets of one sentence within its paragraph."""

    start: int
    end: int


def _is_punct(ch: str) -> bool:
    return not ch.isalnum() and not ch.isspace()


def tokenize(s: str) -> list[TokenSpan]:
    """Split on Unicode whitespace, peeling leading/trailing punctuation into
    single-character tokens.

    Interior punctuation stays attached ("domain-specific" is one token), and
    a final period is kept when the chunk contains an earlier period, so
    abbreviations like "U.S." survive whole.
    """
    tokens: list[TokenSpan] = []
    i, n = 0, len(s)
    while i < n:
        if s[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not s[j].isspace():
            j += 1
        _split_chunk(s, i, j, tokens)
        i = j
    return tokens


def _split_chunk(s: str, start: int, end: int, out: list[TokenSpan]) -> None:
    i, j = start, end
    lead: list[TokenSpan] = []
    while i < j and _is_punct(s[i]):
        lead.append(TokenSpan(s[i], i, i + 1))
        i += 1
    trail: list[TokenSpan] = []
    while j > i and _is_punct(s[j - 1]):
        if s[j - 1] == "." and "." in s[i : j - 1]:
            break
        trail.append(TokenSpan(s[j - 1], j - 1, j))
        j -= 1
    out.extend(lead)
    if i < j:
        out.append(TokenSpan(s[i:j], i, j))
    out.extend(reversed(trail))


# ---------------------------------------------------------------------------
# sentence splitting
# ---------------------------------------------------------------------------


def split_sentences(context: str) -> list[SentenceSpan]:
    """Rule-based sentence boundaries over ``context``.

    A sentence ends at '.', '?' or '!' when whitespace plus an uppercase
    letter or opening quote follows; periods ending a known abbreviation or a
    single capital initial never split. The returned spans exclude only the
    whitespace between sentences: concatenating the span texts with that
    whitespace reconstructs ``context`` exactly.
    """
    if not context:
        return []
    n = len(context)
    breaks: list[tuple[int, int]] = []  # (sentence end, next sentence start)
    for idx, ch in enumerate(context):
        if ch not in _TERMINATORS:
            continue
        k = idx + 1
        while k < n and context[k].isspace():
            k += 1
        if k == idx + 1 or k == n:
            continue
        nxt = context[k]
        if not (nxt.isupper() or nxt in _OPENERS):
            continue
        if ch == "." and _suppresses_split(context, idx):
            continue
        breaks.append((idx + 1, k))
    spans: list[SentenceSpan] = []
    start = 0
    for end, nxt in breaks:
        spans.append(SentenceSpan(start, end))
        start = nxt
    spans.append(SentenceSpan(start, n))
    return spans


def _suppresses_split(context: str, dot: int) -> bool:
    i = dot
    while i > 0 and not context[i - 1].isspace():
        i -= 1
    word = context[i : dot + 1]
    while word and _is_punct(word[0]) and word[0] != ".":
        word = word[1:]
    if word in abbreviation_set():
        return True
    core = word[:-1]
    return len(core) == 1 and core.isalpha() and core.isupper()


# ---------------------------------------------------------------------------
# answer normalization
# ---------------------------------------------------------------------------


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def normalize_answer(s: str) -> str:
    """Lowercase, strip ASCII punctuation, drop the articles a/an/the at word
    boundaries, and collapse whitespace — the official SQuAD v1.1 answer
    normalization."""
    stripped = "".join(ch for ch in s.lower() if ch not in _NORM_PUNCT)
    out: list[str] = []
    i, n = 0, len(stripped)
    while i < n:
        if _is_word_char(stripped[i]):
            j = i
            while j < n and _is_word_char(stripped[j]):
                j += 1
            run = stripped[i:j]
            out.append(" " if run in _ARTICLES else run)
            i = j
        else:
            out.append(stripped[i])
            i += 1
    return " ".join("".join(out).split())


# ---------------------------------------------------------------------------
# TFIDF similarity
# ---------------------------------------------------------------------------


@dataclass
class TfidfModel:
    """TFIDF weights fitted over a small document collection (here: the
    sentences of one paragraph).

    ``idf[i] = ln((1 + N) / (1 + df)) + 1`` where N is ``document_count`` and
    df the number of documents containing the term; ``default_idf`` is the
    same formula at df = 0 and is used for terms outside the collection. All
    weights are therefore finite and >= 1.
    """

    vocabulary: dict[str, int]
    idf: list[float]
    document_count: int
    default_idf: float


def build_tfidf_model(documents: list[str]) -> TfidfModel:
    """Fit a :class:`TfidfModel` over ``documents``.

    Terms come from :func:`normalize_answer`, so casing, punctuation, and
    articles never influence similarity.
    """
    vocabulary: dict[str, int] = {}
    df: list[int] = []
    for doc in documents:
        for term in set(normalize_answer(doc).split()):
            idx = vocabulary.get(term)
            if idx is None:
                vocabulary[term] = len(df)
                df.append(1)
            else:
                df[idx] += 1
    n = len(documents)
    idf = [math.log((1 + n) / (1 + d)) + 1.0 for d in df]
    return TfidfModel(vocabulary, idf, n, math.log(1.0 + n) + 1.0)


def _unit_weights(model: TfidfModel, text: str) -> dict[str, float]:
    counts = Counter(normalize_answer(text).split())
    if not counts:
        return {}
    weights: dict[str, float] = {}
    for term, tf in counts.items():
        idx = model.vocabulary.get(term)
        idf = model.idf[idx] if idx is not None else model.default_idf
        weights[term] = tf * idf
    norm = math.sqrt(math.fsum(w * w for w in weights.values()))
    return {t: w / norm for t, w in weights.items()}


def tfidf_similarity(model: TfidfModel, a: str, b: str) -> float:
    """Cosine similarity of the L2-normalized TFIDF vectors of ``a`` and ``b``.

    Symmetric; 0.0 when either side has no terms after normalization.
    """
    wa = _unit_weights(model, a)
    wb = _unit_weights(model, b)
    if not wa or not wb:
        return 0.0
    dot = math.fsum(w * wb[t] for t, w in wa.items() if t in wb)
    return min(1.0, max(0.0, dot))


# ---------------------------------------------------------------------------
# part-of-speech tagging and keyword extraction
# ---------------------------------------------------------------------------


class PosClass(Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    OTHER = "other"


_VERB_SUFFIXES = ("ing", "ed")
_ADJ_SUFFIXES = ("ous", "ful", "able", "ive")


def tag_pos(tokens: list[TokenSpan]) -> list[PosClass]:
    """Coarse POS classes via the bundled most-frequent-tag lexicon plus
    fallback rules.

    Fallbacks, in order: punctuation -> OTHER; stopword -> OTHER; capitalized
    token not at source offset 0 -> NOUN; -ing/-ed -> VERB; -ous/-ful/-able/
    -ive -> ADJECTIVE; anything else -> NOUN.
    """
    lexicon = pos_lexicon()
    stop = stopword_set()
    tags: list[PosClass] = []
    for tok in tokens:
        text = tok.text
        lower = text.lower()
        if not any(ch.isalnum() for ch in text):
            tags.append(PosClass.OTHER)
        elif lower in lexicon:
            tags.append(lexicon[lower])
        elif lower in stop:
            tags.append(PosClass.OTHER)
        elif tok.start > 0 and text[0].isupper():
            tags.append(PosClass.NOUN)
        elif lower.endswith("ing") and len(lower) >= 5:
            tags.append(PosClass.VERB)
        elif lower.endswith("ed") and len(lower) >= 4:
            tags.append(PosClass.VERB)
        elif lower.endswith(_ADJ_SUFFIXES) and len(lower) >= 5:
            tags.append(PosClass.ADJECTIVE)
        else:
            tags.append(PosClass.NOUN)
    return tags


def extract_keywords(question: str, pos: PosClass) -> list[str]:
    """Question tokens tagged ``pos``, in question order, minus interrogatives
    and stopwords, deduplicated keeping the first occurrence."""
    if pos is PosClass.OTHER:
        raise ValueError("keyword class must be NOUN, VERB, or ADJECTIVE")
    tokens = tokenize(question)
    stop = stopword_set()
    seen: set[str] = set()
    keywords: list[str] = []
    for tok, tag in zip(tokens, tag_pos(tokens)):
        if tag is not pos:
            continue
        lower = tok.text.lower()
        if lower in INTERROGATIVES or lower in stop:
            continue
        if tok.text in seen:
            continue
        seen.add(tok.text)
        keywords.append(tok.text)
    return keywords


def extract_interrogatives(question: str) -> list[str]:
    """Question tokens that are interrogative words (case-insensitive match,
    original casing preserved), in question order."""
    return [
        tok.text for tok in tokenize(question) if tok.text.lower() in INTERROGATIVES
    ]


# ---------------------------------------------------------------------------
# seeded randomness
# ---------------------------------------------------------------------------


class SeededRng:
    """SplitMix64 stream: tiny, portable, and fully specified.

    State update and output, all mod 2**64::

        state += 0x9E3779B97F4A7C15
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        return _mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), bias-free via rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def shuffled_indices(n: int, rng: SeededRng) -> list[int]:
    """Fisher-Yates permutation of range(n): for i = n-1 .. 1, j = below(i+1),
    swap positions i and j. ``result[new_position] == old_index``."""
    indices = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        indices[i], indices[j] = indices[j], indices[i]
    return indices


def derive_seed(global_seed: int, question_id: str) -> int:
    """Stable 64-bit per-question seed.

    FNV-1a over the global seed's 8 little-endian bytes followed by the
    question id's UTF-8 bytes (offset basis 0xCBF29CE484222325, prime
    0x100000001B3), finished with one SplitMix64 mix for avalanche. Identical
    inputs give identical outputs on every platform.
    """
    h = 0xCBF29CE484222325
    data = (global_seed & _MASK64).to_bytes(8, "little") + question_id.encode("utf-8")
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return _mix64(h)


# ---------------------------------------------------------------------------
# bundled data files
# ---------------------------------------------------------------------------


def _data_lines(name: str) -> list[str]:
    text = resources.files("mrclens").joinpath("data", name).read_text("utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@cache
def stopword_set() -> frozenset[str]:
    """Bundled function-word list (lowercase entries)."""
    return frozenset(_data_lines("stopwords.txt"))


@cache
def abbreviation_set() -> frozenset[str]:
    """Bundled abbreviations whose trailing period never ends a sentence."""
    return frozenset(_data_lines("abbreviations.txt"))


@cache
def pos_lexicon() -> dict[str, PosClass]:
    """Bundled word -> most-frequent coarse tag mapping."""
    lexicon: dict[str, PosClass] = {}
    for line in _data_lines("pos_lexicon.txt"):
        word, _, cls = line.partition("\t")
        lexicon[word] = PosClass(cls)
    return lexicon

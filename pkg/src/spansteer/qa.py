"""Question generation / answering interfaces, deterministic stubs, and the
answer-correctness rule used to decide span salience.

The stubs encode the question's target phrase and a one-token relation key
directly in the question string ("Q[<phrase>|<key>]?") so that labeling runs
are reproducible byte-for-byte without any model weights.
"""

from __future__ import annotations

import hashlib
import re
import string
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .corpus import TokenSpan

# Fixed 30-word function-word list used by the token-overlap correctness rule.
# Deliberately stricter than plain token overlap: without it, determiners make
# nearly every predicted answer "correct".
STOPWORDS = frozenset({
    "the", "a", "an", "and", "or", "but", "of", "in", "on", "at", "to",
    "for", "with", "by", "from", "as", "is", "are", "was", "were", "be",
    "been", "it", "its", "his", "her", "their", "this", "that", "these",
})

_PUNCT = string.punctuation


class AdapterError(RuntimeError):
    """A question-generation or question-answering backend failed."""


@dataclass(frozen=True)
class GeneratedQuestion:
    question: str
    source_span: TokenSpan
    source_sentence: int


@dataclass(frozen=True)
class QAPrediction:
    is_answerable: bool
    answer_text: str
    confidence: float

    def __post_init__(self) -> None:
        if not self.is_answerable and self.answer_text:
            raise ValueError("unanswerable prediction must carry an empty answer")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@runtime_checkable
class QuestionGenerator(Protocol):
    """Produces a wh-question whose answer is the given phrase.

    ``answer_char_offsets`` locate the phrase inside ``sentence_text``.
    Implementations may declare ``max_concurrency`` (None = unbounded).
    """

    def generate(self, sentence_text: str, answer_text: str,
                 answer_char_offsets: tuple[int, int]) -> str: ...


@runtime_checkable
class QuestionAnswerer(Protocol):
    def answer(self, question: str, context_text: str) -> QAPrediction: ...


def normalize_tokens(text: str, drop_stopwords: bool = False) -> list[str]:
    """Lowercased whitespace tokens with outer punctuation stripped."""
    out = []
    for raw in text.lower().split():
        tok = raw.strip(_PUNCT)
        if not tok:
            continue
        if drop_stopwords and tok in STOPWORDS:
            continue
        out.append(tok)
    return out


def answer_is_correct(predicted: str, source_phrase: str) -> bool:
    """Token-overlap answer check: true iff the normalized, stopword-free
    token sets intersect. An all-stopword source phrase falls back to raw
    lowercase token intersection."""
    if not source_phrase:
        raise ValueError("source_phrase must be nonempty")
    source = set(normalize_tokens(source_phrase, drop_stopwords=True))
    if not source:
        return bool(set(source_phrase.lower().split())
                    & set(predicted.lower().split()))
    pred = set(normalize_tokens(predicted, drop_stopwords=True))
    return bool(source & pred)


# --------------------------------------------------------------------------
# Deterministic stubs
# --------------------------------------------------------------------------

_STUB_QUESTION = re.compile(r"^Q\[(?P<phrase>.*)\|(?P<key>.*)\]\?$", re.DOTALL)


class TemplateStubGenerator:
    """Emits "Q[<answer>|<key>]?" where <key> is the first non-stopword token
    of the sentence outside the answer span (empty if none exists)."""

    max_concurrency = None

    def generate(self, sentence_text: str, answer_text: str,
                 answer_char_offsets: tuple[int, int]) -> str:
        a_start, a_end = answer_char_offsets
        key = ""
        pos = 0
        for raw in sentence_text.split():
            start = sentence_text.index(raw, pos)
            end = start + len(raw)
            pos = end
            if start < a_end and a_start < end:
                continue  # overlaps the answer span
            tok = raw.strip(_PUNCT)
            if tok and tok.lower() not in STOPWORDS:
                key = tok
                break
        return f"Q[{answer_text}|{key}]?"


def template_stub_generator() -> TemplateStubGenerator:
    return TemplateStubGenerator()


def context_hash(context_text: str) -> str:
    return hashlib.sha256(context_text.encode("utf-8")).hexdigest()[:16]


class LexicalStubAnswerer:
    """Answers stub questions from lexical windows in the context.

    A question is answerable iff some context window contains every
    non-stopword phrase token plus the relation key (that window is where
    the asked-about relation holds). The reported answer is the phrase
    occurrence inside that window: an exact contiguous match of the phrase
    tokens when present, otherwise the shortest sub-window covering the
    phrase's content tokens.

    ``overrides`` maps (question, context_hash(context)) to a fixed
    QAPrediction returned verbatim.
    """

    max_concurrency = None

    def __init__(self, overrides: dict[tuple[str, str], QAPrediction] | None = None):
        self.overrides = dict(overrides or {})

    def answer(self, question: str, context_text: str) -> QAPrediction:
        override = self.overrides.get((question, context_hash(context_text)))
        if override is not None:
            return override
        match = _STUB_QUESTION.match(question)
        if match is None:
            return QAPrediction(False, "", 0.0)
        phrase, key = match.group("phrase"), match.group("key")
        phrase_content = set(normalize_tokens(phrase, drop_stopwords=True))
        if not phrase_content:
            phrase_content = set(phrase.lower().split())
        needed = set(phrase_content)
        key_tok = key.strip(_PUNCT).lower()
        if key_tok:
            needed.add(key_tok)
        chunks = context_text.split()
        norm = [c.strip(_PUNCT).lower() for c in chunks]
        window = _shortest_window(norm, needed)
        if window is None:
            return QAPrediction(False, "", 0.0)
        i, j = _phrase_subwindow(norm, window, normalize_tokens(phrase),
                                 phrase_content)
        answer = " ".join(chunks[i : j + 1]).strip(_PUNCT + " ")
        confidence = round(len(needed) / (window[1] - window[0] + 1), 6)
        return QAPrediction(True, answer, min(confidence, 1.0))


def _shortest_window(tokens: list[str], needed: set[str]) -> tuple[int, int] | None:
    """Leftmost shortest [i, j] covering all needed tokens, else None."""
    if not needed:
        return None
    positions = [i for i, t in enumerate(tokens) if t in needed]
    if not set(tokens) >= needed:
        return None
    best: tuple[int, int] | None = None
    for si, i in enumerate(positions):
        seen = set()
        for j in positions[si:]:
            seen.add(tokens[j])
            if seen == needed:
                if best is None or j - i < best[1] - best[0]:
                    best = (i, j)
                break
    return best


def _phrase_subwindow(norm: list[str], window: tuple[int, int],
                      phrase_norm: list[str],
                      phrase_content: set[str]) -> tuple[int, int]:
    """Tightest answer range at the relation window: prefer an exact
    contiguous phrase match (allowing the mention's articles just outside
    the window), else cover the phrase's content tokens inside it."""
    lo, hi = window
    if phrase_norm:
        pad = len(phrase_norm)
        start = max(0, lo - pad)
        stop = min(len(norm), hi + 1 + pad) - len(phrase_norm)
        for s in range(start, stop + 1):
            if norm[s : s + len(phrase_norm)] == phrase_norm:
                return s, s + len(phrase_norm) - 1
    inner = _shortest_window(norm[lo : hi + 1], phrase_content)
    if inner is not None:
        return lo + inner[0], lo + inner[1]
    return lo, hi


def lexical_stub_answerer(
    overrides: dict[tuple[str, str], QAPrediction] | None = None,
) -> LexicalStubAnswerer:
    return LexicalStubAnswerer(overrides)

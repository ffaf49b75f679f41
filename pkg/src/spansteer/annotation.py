"""Sentence / noun-phrase / entity annotation behind a pluggable provider.

Ships a deterministic rule-based provider for tests and demos plus an
optional spaCy binding. Real syntactic analysis is expected to come from an
external toolkit implementing :class:`SyntacticProvider`.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .corpus import Document, Phrase, TokenSpan, _check_sentence_partition

DETERMINERS = frozenset({"the", "a", "an", "his", "her", "its"})
PRONOUNS = frozenset({"i", "he", "she", "it", "they", "we", "you"})
AUX_VERBS = frozenset({
    "is", "are", "was", "were", "be", "been", "being", "am",
    "has", "have", "had", "having",
    "do", "does", "did",
    "will", "would", "can", "could", "may", "might", "shall", "should", "must",
})
_TRAILING_PUNCT = set(string.punctuation)
_SENTENCE_FINAL = {".", "!", "?"}


class AnnotationError(ValueError):
    """Provider output violated the document invariants, or the text is empty."""


@dataclass(frozen=True)
class ProviderOutput:
    tokens: tuple[str, ...]
    sentences: tuple[TokenSpan, ...]
    noun_phrases: tuple[TokenSpan, ...] = ()
    entities: tuple[TokenSpan, ...] = ()


@runtime_checkable
class SyntacticProvider(Protocol):
    """Pluggable tokenizer / segmenter / phrase extractor.

    ``capabilities`` may contain "sentences", "noun_phrases", "entities".
    Providers that are not safe for concurrent calls set ``exclusive=True``
    and the pipeline serializes access to them.
    """

    capabilities: frozenset[str]
    exclusive: bool

    def analyze(self, text: str) -> ProviderOutput: ...


def _is_punct_token(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def _is_verbish(token: str) -> bool:
    low = token.lower()
    if low in AUX_VERBS:
        return True
    return (len(low) > 4 and low.endswith("ing")) or (len(low) > 3 and low.endswith("ed"))


class FixtureProvider:
    """Deterministic rule-based provider used by the test fixtures.

    Rules: whitespace tokenization with trailing punctuation detached into
    separate tokens; sentence breaks after a chunk-final ``.``, ``!`` or
    ``?``; entities are maximal runs of capitalized tokens; noun phrases are
    those runs plus determiner-led runs of up to three following tokens that
    are not verb-like, punctuation, or new determiners. Runs made solely of
    determiners or pronouns are skipped (bare pronouns are deliberately not
    phrase candidates).
    """

    capabilities = frozenset({"sentences", "noun_phrases", "entities"})
    exclusive = False

    def analyze(self, text: str) -> ProviderOutput:
        tokens: list[str] = []
        sentence_breaks: list[int] = []  # index of last token in each sentence
        for chunk in text.split():
            trailing: list[str] = []
            core = chunk
            while core and core[-1] in _TRAILING_PUNCT:
                trailing.append(core[-1])
                core = core[:-1]
            trailing.reverse()
            if core:
                tokens.append(core)
            tokens.extend(trailing)
            if trailing and trailing[-1] in _SENTENCE_FINAL:
                sentence_breaks.append(len(tokens) - 1)
        if not tokens:
            raise AnnotationError("text produced no tokens")
        if not sentence_breaks or sentence_breaks[-1] != len(tokens) - 1:
            sentence_breaks.append(len(tokens) - 1)
        sentences = []
        start = 0
        for end in sentence_breaks:
            sentences.append(TokenSpan(start, end))
            start = end + 1

        entities = []
        noun_phrases = []
        for sent in sentences:
            entities.extend(self._capitalized_runs(tokens, sent))
            noun_phrases.extend(self._determiner_phrases(tokens, sent))
        noun_phrases = sorted(set(noun_phrases) | set(entities))
        return ProviderOutput(
            tokens=tuple(tokens),
            sentences=tuple(sentences),
            noun_phrases=tuple(noun_phrases),
            entities=tuple(sorted(set(entities))),
        )

    @staticmethod
    def _capitalized_runs(tokens: list[str], sent: TokenSpan) -> list[TokenSpan]:
        runs = []
        i = sent.start
        while i <= sent.end:
            if tokens[i][0].isupper() and tokens[i][0].isalpha():
                j = i
                while (j + 1 <= sent.end and tokens[j + 1][0].isupper()
                       and tokens[j + 1][0].isalpha()):
                    j += 1
                words = [tokens[k].lower() for k in range(i, j + 1)]
                if any(w not in DETERMINERS and w not in PRONOUNS for w in words):
                    runs.append(TokenSpan(i, j))
                i = j + 1
            else:
                i += 1
        return runs

    @staticmethod
    def _determiner_phrases(tokens: list[str], sent: TokenSpan) -> list[TokenSpan]:
        phrases = []
        i = sent.start
        while i <= sent.end:
            if tokens[i].lower() in DETERMINERS:
                j = i
                while (j - i < 3 and j + 1 <= sent.end
                       and tokens[j + 1].lower() not in DETERMINERS
                       and not _is_verbish(tokens[j + 1])
                       and not _is_punct_token(tokens[j + 1])):
                    j += 1
                if j > i:
                    phrases.append(TokenSpan(i, j))
                    i = j + 1
                    continue
            i += 1
        return phrases


def fixture_provider() -> FixtureProvider:
    return FixtureProvider()


class SpacyProvider:
    """Reference binding to spaCy; requires an installed pipeline.

    Phrases that cross a sentence boundary are clipped to the sentence
    containing their first token.
    """

    capabilities = frozenset({"sentences", "noun_phrases", "entities"})
    exclusive = False

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:
            raise AnnotationError(
                "spaCy is not installed; install spacy and a pipeline such as "
                "en_core_web_sm, or use fixture_provider()"
            ) from exc
        self._nlp = spacy.load(model)

    def analyze(self, text: str) -> ProviderOutput:
        parsed = self._nlp(text)
        spacy_tokens = [t for t in parsed if not t.is_space]
        index_of = {t.i: i for i, t in enumerate(spacy_tokens)}
        tokens = tuple(t.text for t in spacy_tokens)
        sentences = []
        for sent in parsed.sents:
            idx = [index_of[t.i] for t in sent if t.i in index_of]
            if idx:
                sentences.append(TokenSpan(min(idx), max(idx)))

        def to_span(span) -> TokenSpan | None:
            idx = [index_of[t.i] for t in span if t.i in index_of]
            return TokenSpan(min(idx), max(idx)) if idx else None

        nps = [s for s in (to_span(c) for c in parsed.noun_chunks) if s]
        ents = [s for s in (to_span(e) for e in parsed.ents) if s]
        return ProviderOutput(tokens, tuple(sentences), tuple(nps), tuple(ents))


def _clip_to_sentence(span: TokenSpan, sentences: tuple[TokenSpan, ...]) -> TokenSpan | None:
    for sent in sentences:
        if sent.start <= span.start <= sent.end:
            return TokenSpan(span.start, min(span.end, sent.end))
    return None


def annotate(text: str, provider: SyntacticProvider, doc_id: str = "doc") -> Document:
    """Tokenize, segment, and extract candidate phrases into a Document.

    Raises AnnotationError for empty text or provider output that cannot be
    reconciled with the document invariants.
    """
    if not text or not text.strip():
        raise AnnotationError("empty text")
    try:
        out = provider.analyze(text)
    except AnnotationError:
        raise
    except Exception as exc:
        raise AnnotationError(
            f"provider {type(provider).__name__} failed: {exc}") from exc
    problems = _check_sentence_partition(out.sentences, len(out.tokens), "document")
    if problems:
        raise AnnotationError(
            f"provider {type(provider).__name__} returned invalid sentences: "
            + "; ".join(problems)
        )
    phrases: list[Phrase] = []
    for spans, phrase_type in ((out.noun_phrases, "np"), (out.entities, "entity")):
        clipped: set[TokenSpan] = set()
        for span in spans:
            if span.end >= len(out.tokens):
                raise AnnotationError(
                    f"provider {type(provider).__name__} returned out-of-bounds "
                    f"phrase ({span.start}, {span.end})"
                )
            within = _clip_to_sentence(span, out.sentences)
            if within is None:
                raise AnnotationError(
                    f"provider {type(provider).__name__} returned phrase "
                    f"({span.start}, {span.end}) outside all sentences"
                )
            clipped.add(within)
        phrases.extend(Phrase(span, phrase_type) for span in sorted(clipped))
    phrases.sort(key=lambda p: (p.span.start, p.span.end, p.phrase_type))
    return Document(
        id=doc_id,
        text=text,
        tokens=out.tokens,
        sentences=out.sentences,
        phrases=tuple(phrases),
    )

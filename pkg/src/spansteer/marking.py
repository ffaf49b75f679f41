"""Span marking: serialize salient spans into the token stream with
boundary markers so an unmodified seq2seq model can condition on them.

Markers are the literal atomic tokens ``[SS]`` and ``[SE]``. Overlapping
spans are resolved before marking (highest score wins), so marked regions
never nest or cross.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import AnnotatedExample, SpanLabel, TokenSpan

logger = logging.getLogger(__name__)

SPAN_START = "[SS]"
SPAN_END = "[SE]"
MARKER_TOKENS = (SPAN_START, SPAN_END)


class MarkingError(ValueError):
    """Spans passed to mark_spans overlap or collide with marker tokens."""


@dataclass(frozen=True)
class MarkedSequence:
    """Document tokens with boundary markers inserted.

    ``provenance`` maps each marker's position in ``tokens`` back to the
    source span it delimits.
    """

    tokens: tuple[str, ...]
    provenance: dict[int, TokenSpan]

    def marker_count(self) -> int:
        return sum(1 for t in self.tokens if t in MARKER_TOKENS)


def resolve_overlaps(spans: Iterable[tuple[TokenSpan, float]]) -> list[TokenSpan]:
    """Greedily keep spans by descending score, discarding any span that
    overlaps an already-kept one; ties prefer longer spans, then earlier
    start. Result is sorted by start."""
    ordered = sorted(spans, key=lambda item: (-item[1], -len(item[0]),
                                              item[0].start, item[0].end))
    kept: list[TokenSpan] = []
    for span, _ in ordered:
        if not any(span.overlaps(existing) for existing in kept):
            kept.append(span)
    return sorted(kept)


def resolve_label_overlaps(labels: Sequence[SpanLabel]) -> list[TokenSpan]:
    """Overlap resolution for unscored oracle labels: longer spans win,
    then earlier start."""
    return resolve_overlaps((l.span, 0.0) for l in labels)


def mark_spans(doc_tokens: Sequence[str], spans: Sequence[TokenSpan]) -> MarkedSequence:
    """Insert [SS] before and [SE] after each span.

    Spans must be sorted, non-overlapping, and in bounds; use
    resolve_overlaps first if they might collide.
    """
    for token in doc_tokens:
        if token in MARKER_TOKENS:
            raise MarkingError(f"document already contains marker token {token!r}")
    ordered = sorted(spans)
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.overlaps(cur):
            raise MarkingError(
                f"overlapping spans ({prev.start}, {prev.end}) and "
                f"({cur.start}, {cur.end}); resolve overlaps first"
            )
    if ordered and ordered[-1].end >= len(doc_tokens):
        span = ordered[-1]
        raise MarkingError(
            f"span ({span.start}, {span.end}) out of bounds for "
            f"{len(doc_tokens)} tokens"
        )
    tokens: list[str] = []
    provenance: dict[int, TokenSpan] = {}
    span_iter = iter(ordered)
    current = next(span_iter, None)
    for i, token in enumerate(doc_tokens):
        if current is not None and i == current.start:
            provenance[len(tokens)] = current
            tokens.append(SPAN_START)
        tokens.append(token)
        if current is not None and i == current.end:
            provenance[len(tokens)] = current
            tokens.append(SPAN_END)
            current = next(span_iter, None)
    return MarkedSequence(tokens=tuple(tokens), provenance=provenance)


def strip_markers(marked: MarkedSequence | Sequence[str]) -> tuple[str, ...]:
    tokens = marked.tokens if isinstance(marked, MarkedSequence) else marked
    return tuple(t for t in tokens if t not in MARKER_TOKENS)


def marked_sentence_flags(tokens: Sequence[str]) -> list[tuple[list[str], bool]]:
    """Split a marked token stream into sentences (on ., !, ?) and flag the
    ones containing at least one marker. Marker tokens are removed from the
    returned sentence token lists."""
    sentences: list[tuple[list[str], bool]] = []
    current: list[str] = []
    has_marker = False
    for token in tokens:
        if token in MARKER_TOKENS:
            has_marker = True
            continue
        current.append(token)
        if token in (".", "!", "?"):
            sentences.append((current, has_marker))
            current, has_marker = [], False
    if current:
        sentences.append((current, has_marker))
    return sentences


def build_generation_training_set(
    corpus: Iterable[AnnotatedExample],
) -> list[tuple[MarkedSequence, tuple[str, ...]]]:
    """One (marked document, gold summary tokens) pair per example, marking
    the overlap-resolved salient oracle spans. Examples with no salient span
    are kept with an unmarked document."""
    pairs = []
    unmarked = 0
    for ex in corpus:
        salient = ex.salient_labels()
        spans = resolve_label_overlaps(salient) if salient else []
        if not spans:
            unmarked += 1
        pairs.append((mark_spans(ex.document.tokens, spans), ex.summary.tokens))
    if unmarked:
        logger.info("generation training set: %d example(s) had no salient "
                    "spans and were kept unmarked", unmarked)
    return pairs

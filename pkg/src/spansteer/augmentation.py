"""Controllability-oriented training data augmentation.

QA labeling induces a mapping from salient document spans to the gold
summary sentences that answer their questions. Two transforms exploit it:
dropping summary sentences no span maps to (they teach the model to emit
unmarked content), and emitting one prefix example per k = 1..m pairing the
first k supported summary sentences with exactly the spans that map to them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .corpus import AnnotatedExample, GoldSummary, SpanLabel, TokenSpan
from .oracles import _contains_sublist, _token_char_ranges

logger = logging.getLogger(__name__)


class MappingError(ValueError):
    """A salient QA label is missing its summary-sentence assignment."""


@dataclass(frozen=True)
class SpanSummaryMapping:
    """Bidirectional span-to-summary-sentence mapping for salient labels."""

    span_to_sentence: dict[TokenSpan, int]
    sentence_to_spans: dict[int, frozenset[TokenSpan]]

    def supported_sentences(self) -> list[int]:
        return [j for j in sorted(self.sentence_to_spans)
                if self.sentence_to_spans[j]]


def _assemble(pairs: Iterable[tuple[TokenSpan, int]],
              n_sentences: int) -> SpanSummaryMapping:
    span_to_sentence = dict(pairs)
    sentence_to_spans = {
        j: frozenset(s for s, js in span_to_sentence.items() if js == j)
        for j in range(n_sentences)
    }
    return SpanSummaryMapping(span_to_sentence, sentence_to_spans)


def build_mapping(labels: Sequence[SpanLabel],
                  summary: GoldSummary) -> SpanSummaryMapping:
    """Mapping from salient QA labels; non-salient labels are ignored."""
    pairs = []
    for label in labels:
        if not label.salient:
            continue
        if label.summary_sentence is None:
            raise MappingError(
                f"salient span ({label.span.start}, {label.span.end}) has no "
                f"summary_sentence; labels must come from QA labeling"
            )
        pairs.append((label.span, label.summary_sentence))
    return _assemble(pairs, len(summary.sentences))


def build_lexical_mapping(ex: AnnotatedExample) -> SpanSummaryMapping:
    """Equivalent mapping for lexically labeled NPs: each salient span maps
    to the first summary sentence containing its surface string."""
    summary = ex.summary
    pairs = []
    for label in ex.oracle_spans:
        if not label.salient:
            continue
        surface = tuple(t.lower() for t in ex.document.span_tokens(label.span))
        for j in range(len(summary.sentences)):
            sent = tuple(t.lower() for t in summary.sentence_tokens(j))
            if _contains_sublist(sent, surface):
                pairs.append((label.span, j))
                break
    return _assemble(pairs, len(summary.sentences))


def _summary_slice(summary: GoldSummary, kept: Sequence[int]) -> GoldSummary:
    """New GoldSummary from a subset of sentence indices (in order)."""
    ranges = _token_char_ranges(summary.text, summary.tokens)
    tokens: list[str] = []
    sentences: list[TokenSpan] = []
    texts: list[str] = []
    for j in kept:
        sent = summary.sentences[j]
        start = len(tokens)
        tokens.extend(summary.sentence_tokens(j))
        sentences.append(TokenSpan(start, len(tokens) - 1))
        texts.append(summary.text[ranges[sent.start][0]: ranges[sent.end][1]])
    return GoldSummary(text=" ".join(texts), tokens=tuple(tokens),
                       sentences=tuple(sentences))


def remove_unsupported_sentences(
    ex: AnnotatedExample, mapping: SpanSummaryMapping,
) -> AnnotatedExample | None:
    """Delete summary sentences with no mapped span, re-indexing the rest.
    Returns None when every sentence is unsupported (example dropped)."""
    kept = mapping.supported_sentences()
    if not kept:
        return None
    if kept == list(range(len(ex.summary.sentences))):
        return ex
    new_index = {old: new for new, old in enumerate(kept)}
    labels = []
    for label in ex.oracle_spans:
        if (label.salient and label.summary_sentence is not None
                and label.span in mapping.span_to_sentence):
            old = mapping.span_to_sentence[label.span]
            labels.append(replace(label, summary_sentence=new_index[old]))
        else:
            labels.append(label)
    return replace(ex, summary=_summary_slice(ex.summary, kept),
                   oracle_spans=tuple(labels))


def generate_prefix_examples(
    ex: AnnotatedExample, mapping: SpanSummaryMapping,
) -> list[AnnotatedExample]:
    """One example per k = 1..m: gold summary truncated to its first k
    sentences, salient spans restricted to those mapping below k. The k=m
    example stands in for the cleaned original."""
    m = len(ex.summary.sentences)
    if m < 1:
        raise ValueError("example has no summary sentences")
    out = []
    for k in range(1, m + 1):
        labels = []
        for label in ex.oracle_spans:
            sent = mapping.span_to_sentence.get(label.span)
            if label.salient and sent is not None and sent < k:
                labels.append(label)
            elif label.salient:
                labels.append(replace(label, salient=False, summary_sentence=None))
            else:
                labels.append(label)
        doc = replace(ex.document, id=f"{ex.document.id}::k{k}")
        out.append(AnnotatedExample(
            document=doc,
            summary=_summary_slice(ex.summary, list(range(k))),
            span_type=ex.span_type,
            oracle_spans=tuple(labels),
            augmentation={"source_id": ex.id, "k": k, "m": m},
        ))
    return out


def augment_example(ex: AnnotatedExample) -> list[AnnotatedExample]:
    """Full augmentation of one example; empty list when it is dropped."""
    if ex.span_type == "qa":
        mapping = build_mapping(ex.oracle_spans, ex.summary)
    elif ex.span_type == "np":
        mapping = build_lexical_mapping(ex)
    else:
        raise ValueError(
            f"augmentation is defined for qa and np span types, "
            f"not {ex.span_type!r}"
        )
    cleaned = remove_unsupported_sentences(ex, mapping)
    if cleaned is None:
        return []
    mapping = (build_mapping(cleaned.oracle_spans, cleaned.summary)
               if ex.span_type == "qa" else build_lexical_mapping(cleaned))
    return generate_prefix_examples(cleaned, mapping)


def augment_corpus(
    examples: Iterable[AnnotatedExample],
) -> tuple[list[AnnotatedExample], dict]:
    """Augment every example; returns (examples, corpus-shift stats)."""
    out: list[AnnotatedExample] = []
    stats = {"input": 0, "dropped": 0, "output": 0}
    for ex in examples:
        stats["input"] += 1
        augmented = augment_example(ex)
        if not augmented:
            stats["dropped"] += 1
            logger.info("augmentation dropped example %s: no supported "
                        "summary sentences", ex.id)
        out.extend(augmented)
    stats["output"] = len(out)
    return out, stats

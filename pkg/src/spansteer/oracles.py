"""Oracle span labeling: which candidate spans of a document are salient
with respect to its gold summary.

Four strategies: greedy ROUGE-2 sentence selection, lexical first-occurrence
matching for entities and noun phrases, and QA-based labeling in which a
noun phrase is salient iff the wh-question generated for it from its own
sentence is answered correctly against the gold summary.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, Sequence

from .annotation import SyntacticProvider, annotate
from .corpus import (
    AnnotatedExample,
    Document,
    GoldSummary,
    SpanLabel,
    TokenSpan,
    detokenize,
    span_surface,
    with_span_labels,
)
from .qa import (
    AdapterError,
    QuestionAnswerer,
    QuestionGenerator,
    answer_is_correct,
    normalize_tokens,
)
from .rouge import rouge_2

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Greedy ROUGE-2 sentence oracle
# --------------------------------------------------------------------------

def greedy_rouge2_selection(doc: Document, summary: GoldSummary, k: int) -> list[int]:
    """Sentence indices in selection order.

    Each step adds the sentence that maximizes ROUGE-2 F1 of the selected
    sentences (concatenated in document order) against the gold summary;
    stops early when no candidate strictly improves the score. Ties break
    toward the smallest sentence index.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    selected: list[int] = []
    best_score = 0.0
    reference = summary.tokens
    while len(selected) < k:
        best_idx = -1
        step_best = best_score
        for i in range(len(doc.sentences)):
            if i in selected:
                continue
            chosen = sorted(selected + [i])
            candidate: list[str] = []
            for j in chosen:
                candidate.extend(doc.sentence_tokens(j))
            score = rouge_2(candidate, reference).f1
            if score > step_best:
                step_best = score
                best_idx = i
        if best_idx < 0:
            break
        selected.append(best_idx)
        best_score = step_best
    return selected


def greedy_rouge2_sentences(doc: Document, summary: GoldSummary,
                            k: int) -> list[TokenSpan]:
    """Selected sentence spans in document order."""
    return [doc.sentences[i] for i in sorted(greedy_rouge2_selection(doc, summary, k))]


# --------------------------------------------------------------------------
# Lexical first-occurrence labeling
# --------------------------------------------------------------------------

def _contains_sublist(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    if n == 0 or n > len(haystack):
        return False
    return any(tuple(haystack[i : i + n]) == tuple(needle)
               for i in range(len(haystack) - n + 1))


def lexical_first_occurrence(doc: Document, summary: GoldSummary,
                             phrase_type: str) -> list[SpanLabel]:
    """Label every candidate of ``phrase_type``; for each distinct surface
    string that appears verbatim in the summary, only the earliest document
    occurrence is salient."""
    candidates = [p.span for p in doc.phrases_of_type(phrase_type)]
    summary_lower = tuple(t.lower() for t in summary.tokens)
    first_match: dict[tuple[str, ...], TokenSpan] = {}
    for span in sorted(candidates):
        surface = tuple(t.lower() for t in doc.span_tokens(span))
        if surface in first_match:
            continue
        if _contains_sublist(summary_lower, surface):
            first_match[surface] = span
    salient = set(first_match.values())
    return [SpanLabel(span=span, salient=span in salient)
            for span in sorted(candidates)]


# --------------------------------------------------------------------------
# QA-based labeling
# --------------------------------------------------------------------------

def _token_char_ranges(text: str, tokens: Sequence[str]) -> list[tuple[int, int]]:
    """Greedy left-to-right character range of each token within text."""
    ranges = []
    lower = text.lower()
    pos = 0
    for tok in tokens:
        found = lower.find(tok.lower(), pos)
        if found < 0:
            found = pos  # token not literally present; keep monotone
        ranges.append((found, found + len(tok)))
        pos = found + len(tok)
    return ranges


def _span_char_offsets(sentence_tokens: Sequence[str], sentence_text: str,
                       local_start: int, local_end: int) -> tuple[int, int]:
    ranges = _token_char_ranges(sentence_text, sentence_tokens)
    return ranges[local_start][0], ranges[local_end][1]


def _summary_sentence_of_answer(summary: GoldSummary, answer_text: str) -> int:
    """Summary sentence containing the predicted answer's start position."""
    if not summary.sentences:
        return 0
    ranges = _token_char_ranges(summary.text, summary.tokens)
    char_start = summary.text.lower().find(answer_text.lower())
    if char_start < 0:
        # Fall back to the first content token of the answer.
        for tok in normalize_tokens(answer_text, drop_stopwords=True):
            norm = [t.strip(".,!?;:\"'").lower() for t in summary.tokens]
            if tok in norm:
                return _sentence_of_token(summary, norm.index(tok))
        return 0
    for i, (start, end) in enumerate(ranges):
        if start <= char_start < end or char_start < start:
            return _sentence_of_token(summary, i)
    return _sentence_of_token(summary, len(summary.tokens) - 1)


def _sentence_of_token(summary: GoldSummary, token_index: int) -> int:
    for i, s in enumerate(summary.sentences):
        if s.start <= token_index <= s.end:
            return i
    return len(summary.sentences) - 1


def qa_salience(doc: Document, summary: GoldSummary, qg: QuestionGenerator,
                qa: QuestionAnswerer) -> list[SpanLabel]:
    """One label per NP candidate: generate a question from the NP's own
    sentence, answer it against the gold summary, and mark the NP salient
    iff the question is answerable and the answer overlaps the NP."""
    labels = []
    for phrase in doc.phrases_of_type("np"):
        span = phrase.span
        sent_idx = doc.sentence_index_of(span.start)
        sent = doc.sentences[sent_idx]
        sent_tokens = doc.sentence_tokens(sent_idx)
        sent_text = detokenize(sent_tokens)
        answer_text = span_surface(doc.tokens, span)
        offsets = _span_char_offsets(sent_tokens, sent_text,
                                     span.start - sent.start,
                                     span.end - sent.start)
        try:
            question = qg.generate(sent_text, answer_text, offsets)
        except Exception as exc:
            raise AdapterError(
                f"question generation failed for span ({span.start}, {span.end}) "
                f"of document {doc.id!r}: {exc}"
            ) from exc
        if not question:
            raise AdapterError(
                f"generator returned an empty question for span "
                f"({span.start}, {span.end}) of document {doc.id!r}"
            )
        try:
            pred = qa.answer(question, summary.text)
        except Exception as exc:
            raise AdapterError(
                f"answering failed for span ({span.start}, {span.end}) "
                f"of document {doc.id!r}: {exc}"
            ) from exc
        salient = pred.is_answerable and answer_is_correct(pred.answer_text,
                                                           answer_text)
        labels.append(SpanLabel(
            span=span,
            salient=salient,
            question=question,
            predicted_answer=pred.answer_text if pred.is_answerable else None,
            summary_sentence=(_summary_sentence_of_answer(summary, pred.answer_text)
                              if salient else None),
        ))
    return labels


# --------------------------------------------------------------------------
# Corpus-level annotation
# --------------------------------------------------------------------------

def label_example(ex: AnnotatedExample, span_type: str, *,
                  qg: QuestionGenerator | None = None,
                  qa: QuestionAnswerer | None = None,
                  k: int = 3,
                  provider: SyntacticProvider | None = None) -> AnnotatedExample:
    """Attach oracle labels for one strategy to an example."""
    doc = ex.document
    if span_type != "sentence" and not doc.phrases and provider is not None:
        doc = annotate(doc.text, provider, doc_id=doc.id)
        ex = AnnotatedExample(document=doc, summary=ex.summary)
    if span_type == "sentence":
        chosen = set(greedy_rouge2_sentences(doc, ex.summary, k))
        labels = [SpanLabel(span=s, salient=s in chosen) for s in doc.sentences]
    elif span_type in ("np", "entity"):
        labels = lexical_first_occurrence(doc, ex.summary, span_type)
    elif span_type == "qa":
        if qg is None or qa is None:
            raise ValueError("qa span_type requires question generation and "
                             "answering adapters")
        labels = qa_salience(doc, ex.summary, qg, qa)
    else:
        raise ValueError(f"unknown span_type {span_type!r}")
    return with_span_labels(ex, span_type, labels)


def label_corpus(examples: Iterable[AnnotatedExample], span_type: str, *,
                 qg: QuestionGenerator | None = None,
                 qa: QuestionAnswerer | None = None,
                 k: int = 3,
                 provider: SyntacticProvider | None = None,
                 workers: int = 1) -> Iterator[AnnotatedExample]:
    """Label a corpus, optionally across worker threads (order preserved)."""
    limit = workers
    for adapter in (qg, qa):
        cap = getattr(adapter, "max_concurrency", None)
        if cap is not None:
            limit = min(limit, cap)
    if getattr(provider, "exclusive", False):
        limit = 1

    def work(ex: AnnotatedExample) -> AnnotatedExample:
        return label_example(ex, span_type, qg=qg, qa=qa, k=k, provider=provider)

    if limit <= 1:
        for ex in examples:
            yield work(ex)
        return
    with ThreadPoolExecutor(max_workers=limit) as pool:
        yield from pool.map(work, examples)

"""Core data types and JSONL corpus I/O.

Documents arrive pre-tokenized; all span indices are word-token offsets,
inclusive on both ends. Types are immutable after construction so they can
be shared freely across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

SPAN_TYPES = ("sentence", "entity", "np", "qa")
PHRASE_TYPES = ("np", "entity")


class CorpusError(ValueError):
    """Raised for malformed corpus files or records."""


@dataclass(frozen=True, order=True)
class TokenSpan:
    """Token span with inclusive start and end indices."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise CorpusError(f"invalid span ({self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def overlaps(self, other: "TokenSpan") -> bool:
        return self.start <= other.end and other.start <= self.end

    def contains(self, other: "TokenSpan") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class Phrase:
    """Candidate phrase span tagged with its extraction type (np or entity)."""

    span: TokenSpan
    phrase_type: str

    def __post_init__(self) -> None:
        if self.phrase_type not in PHRASE_TYPES:
            raise CorpusError(f"unknown phrase_type {self.phrase_type!r}")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tokens: tuple[str, ...]
    sentences: tuple[TokenSpan, ...]
    phrases: tuple[Phrase, ...] = ()

    def sentence_tokens(self, index: int) -> tuple[str, ...]:
        s = self.sentences[index]
        return self.tokens[s.start : s.end + 1]

    def sentence_index_of(self, token_index: int) -> int:
        """Index of the sentence containing a token position."""
        for i, s in enumerate(self.sentences):
            if s.start <= token_index <= s.end:
                return i
        raise CorpusError(f"token index {token_index} outside all sentences")

    def span_tokens(self, span: TokenSpan) -> tuple[str, ...]:
        return self.tokens[span.start : span.end + 1]

    def phrases_of_type(self, phrase_type: str) -> tuple[Phrase, ...]:
        return tuple(p for p in self.phrases if p.phrase_type == phrase_type)


@dataclass(frozen=True)
class GoldSummary:
    text: str
    tokens: tuple[str, ...]
    sentences: tuple[TokenSpan, ...]

    def sentence_tokens(self, index: int) -> tuple[str, ...]:
        s = self.sentences[index]
        return self.tokens[s.start : s.end + 1]


@dataclass(frozen=True)
class SpanLabel:
    """Salience verdict for one candidate span.

    question / predicted_answer / summary_sentence are only populated for
    labels produced by the QA labeling strategy.
    """

    span: TokenSpan
    salient: bool
    question: str | None = None
    predicted_answer: str | None = None
    summary_sentence: int | None = None


@dataclass(frozen=True)
class AnnotatedExample:
    document: Document
    summary: GoldSummary
    span_type: str | None = None
    oracle_spans: tuple[SpanLabel, ...] = ()
    augmentation: dict | None = field(default=None, compare=False)

    @property
    def id(self) -> str:
        return self.document.id

    def salient_labels(self) -> tuple[SpanLabel, ...]:
        return tuple(l for l in self.oracle_spans if l.salient)


def detokenize(tokens: Iterable[str]) -> str:
    """Plain space-joined surface form of a token sequence."""
    return " ".join(tokens)


def span_surface(tokens: tuple[str, ...], span: TokenSpan) -> str:
    return detokenize(tokens[span.start : span.end + 1])


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------

def _check_sentence_partition(sentences: tuple[TokenSpan, ...], n_tokens: int,
                              where: str) -> list[str]:
    problems: list[str] = []
    if n_tokens == 0:
        if sentences:
            problems.append(f"{where}: sentences present but no tokens")
        return problems
    if not sentences:
        problems.append(f"{where}: no sentence spans over {n_tokens} tokens")
        return problems
    expected = 0
    for i, s in enumerate(sentences):
        if s.start != expected:
            problems.append(
                f"{where}: sentence {i} starts at {s.start}, expected {expected}"
            )
        if s.end >= n_tokens:
            problems.append(
                f"{where}: sentence {i} span ({s.start}, {s.end}) out of bounds "
                f"for {n_tokens} tokens"
            )
            return problems
        expected = s.end + 1
    if expected != n_tokens:
        problems.append(
            f"{where}: sentences cover tokens 0..{expected - 1} of {n_tokens}"
        )
    return problems


def validate_example(ex: AnnotatedExample) -> list[str]:
    """All invariant violations in an example; empty list means well-formed."""
    doc, summary = ex.document, ex.summary
    problems = _check_sentence_partition(doc.sentences, len(doc.tokens), "document")
    problems += _check_sentence_partition(summary.sentences, len(summary.tokens),
                                          "summary")

    for p in doc.phrases:
        if p.span.end >= len(doc.tokens):
            problems.append(
                f"phrase span ({p.span.start}, {p.span.end}) out of bounds "
                f"for {len(doc.tokens)} tokens"
            )
            continue
        if not any(s.contains(p.span) for s in doc.sentences):
            problems.append(
                f"phrase span ({p.span.start}, {p.span.end}) crosses a "
                f"sentence boundary"
            )
    for phrase_type in PHRASE_TYPES:
        spans = [p.span for p in doc.phrases if p.phrase_type == phrase_type]
        if len(spans) != len(set(spans)):
            problems.append(f"duplicate {phrase_type} phrase spans")

    if ex.span_type is not None and ex.span_type not in SPAN_TYPES:
        problems.append(f"unknown span_type {ex.span_type!r}")

    if ex.oracle_spans:
        if ex.span_type == "sentence":
            candidates = set(doc.sentences)
        elif ex.span_type in ("np", "entity"):
            candidates = {p.span for p in doc.phrases if p.phrase_type == ex.span_type}
        elif ex.span_type == "qa":
            candidates = {p.span for p in doc.phrases if p.phrase_type == "np"}
        else:
            candidates = set()
            problems.append("oracle_spans present without a valid span_type")
        seen: set[TokenSpan] = set()
        for label in ex.oracle_spans:
            if label.span in seen:
                problems.append(
                    f"duplicate oracle span ({label.span.start}, {label.span.end})"
                )
            seen.add(label.span)
            if candidates and label.span not in candidates:
                problems.append(
                    f"oracle span ({label.span.start}, {label.span.end}) is not "
                    f"a {ex.span_type} candidate"
                )
            if ex.span_type != "qa" and (
                label.question is not None or label.summary_sentence is not None
            ):
                problems.append(
                    f"span ({label.span.start}, {label.span.end}): question / "
                    f"summary_sentence set on a non-qa label"
                )
            if ex.span_type == "qa" and label.salient:
                if (label.question is None or label.predicted_answer is None
                        or label.summary_sentence is None):
                    problems.append(
                        f"salient qa span ({label.span.start}, {label.span.end}) "
                        f"missing question, predicted_answer, or summary_sentence"
                    )
            if (label.summary_sentence is not None
                    and not 0 <= label.summary_sentence < len(summary.sentences)):
                problems.append(
                    f"span ({label.span.start}, {label.span.end}): "
                    f"summary_sentence {label.summary_sentence} out of range"
                )
    return problems


# --------------------------------------------------------------------------
# JSONL serialization (canonical field order)
# --------------------------------------------------------------------------

def _span_pair(obj, line_no: int, where: str) -> TokenSpan:
    if (not isinstance(obj, (list, tuple)) or len(obj) != 2
            or not all(isinstance(v, int) for v in obj)):
        raise CorpusError(f"line {line_no}: {where} must be a [start, end] pair")
    try:
        return TokenSpan(obj[0], obj[1])
    except CorpusError as exc:
        raise CorpusError(f"line {line_no}: {where}: {exc}") from exc


def example_from_record(record: dict, line_no: int = 0,
                        schema: str = "annotated") -> AnnotatedExample:
    for key in ("id", "text", "tokens", "sentences", "summary"):
        if key not in record:
            raise CorpusError(f"line {line_no}: missing field {key!r}")
    phrases = []
    for p in record.get("phrases", []):
        if not isinstance(p, dict) or not {"start", "end", "type"} <= set(p):
            raise CorpusError(f"line {line_no}: phrases entries need start/end/type")
        span = _span_pair([p["start"], p["end"]], line_no, "phrase")
        if p["type"] not in PHRASE_TYPES:
            raise CorpusError(f"line {line_no}: phrase type {p['type']!r} invalid")
        phrases.append(Phrase(span, p["type"]))
    doc = Document(
        id=str(record["id"]),
        text=record["text"],
        tokens=tuple(record["tokens"]),
        sentences=tuple(_span_pair(s, line_no, "document sentence")
                        for s in record["sentences"]),
        phrases=tuple(phrases),
    )
    s = record["summary"]
    for key in ("text", "tokens", "sentences"):
        if key not in s:
            raise CorpusError(f"line {line_no}: summary missing field {key!r}")
    summary = GoldSummary(
        text=s["text"],
        tokens=tuple(s["tokens"]),
        sentences=tuple(_span_pair(p, line_no, "summary sentence")
                        for p in s["sentences"]),
    )
    span_type = record.get("span_type")
    labels = []
    if schema == "raw":
        span_type = None
    else:
        for o in record.get("oracle_spans", []):
            span = _span_pair([o.get("start"), o.get("end")], line_no, "oracle span")
            labels.append(SpanLabel(
                span=span,
                salient=bool(o["salient"]),
                question=o.get("question"),
                predicted_answer=o.get("predicted_answer"),
                summary_sentence=o.get("summary_sentence"),
            ))
    ex = AnnotatedExample(
        document=doc,
        summary=summary,
        span_type=span_type,
        oracle_spans=tuple(labels),
        augmentation=record.get("augmentation"),
    )
    problems = validate_example(ex)
    if problems:
        raise CorpusError(f"line {line_no}: " + "; ".join(problems))
    return ex


def example_to_record(ex: AnnotatedExample) -> dict:
    """Record dict in canonical field order."""
    doc = ex.document
    record: dict = {
        "id": doc.id,
        "text": doc.text,
        "tokens": list(doc.tokens),
        "sentences": [[s.start, s.end] for s in doc.sentences],
        "phrases": [
            {"start": p.span.start, "end": p.span.end, "type": p.phrase_type}
            for p in doc.phrases
        ],
        "summary": {
            "text": ex.summary.text,
            "tokens": list(ex.summary.tokens),
            "sentences": [[s.start, s.end] for s in ex.summary.sentences],
        },
    }
    if ex.span_type is not None:
        record["span_type"] = ex.span_type
        record["oracle_spans"] = [
            {
                "start": l.span.start,
                "end": l.span.end,
                "salient": l.salient,
                "question": l.question,
                "predicted_answer": l.predicted_answer,
                "summary_sentence": l.summary_sentence,
            }
            for l in ex.oracle_spans
        ]
    if ex.augmentation is not None:
        record["augmentation"] = ex.augmentation
    return record


def serialize_example(ex: AnnotatedExample) -> str:
    return json.dumps(example_to_record(ex), ensure_ascii=False,
                      separators=(", ", ": "))


def load_corpus(path: str | Path, schema: str = "annotated") -> Iterator[AnnotatedExample]:
    """Stream validated examples from a JSONL file in file order."""
    if schema not in ("raw", "annotated"):
        raise CorpusError(f"unknown schema {schema!r}")
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_no}: invalid JSON: {exc}") from exc
            yield example_from_record(record, line_no, schema)


def save_corpus(examples: Iterable[AnnotatedExample], path: str | Path) -> int:
    """Write examples as canonical JSONL; returns the record count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(serialize_example(ex) + "\n")
            n += 1
    return n


def with_span_labels(ex: AnnotatedExample, span_type: str,
                     labels: Iterable[SpanLabel]) -> AnnotatedExample:
    return replace(ex, span_type=span_type, oracle_spans=tuple(labels))

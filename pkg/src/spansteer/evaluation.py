"""Summary quality and content-control metrics plus run-level reporting.

Quality: ROUGE-1/2/L and a QA-based score (one question per gold-summary
noun phrase, token-F1 between the predicted answer and the phrase).
Control: question recall over the marked spans' questions, and the ratio of
marked-span count to summary length as a conciseness proxy.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .annotation import SyntacticProvider, annotate
from .classifier import SpanScore
from .corpus import AnnotatedExample, Document, SpanLabel, detokenize, span_surface
from .generation import DecodeConfig, GenerationCheckpoint, SummaryResult, summarize
from .oracles import _span_char_offsets
from .qa import QuestionAnswerer, QuestionGenerator, answer_is_correct, normalize_tokens
from .rouge import rouge_1, rouge_2, rouge_l

logger = logging.getLogger(__name__)


def answer_token_f1(predicted: str, expected: str) -> float:
    """Token-level F1 between normalized token multisets; two empty strings
    score 1, exactly one empty scores 0."""
    pred = Counter(normalize_tokens(predicted))
    exp = Counter(normalize_tokens(expected))
    if not pred and not exp:
        return 1.0
    if not pred or not exp:
        return 0.0
    overlap = sum(min(count, exp[token]) for token, count in pred.items())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(pred.values())
    recall = overlap / sum(exp.values())
    return 2 * precision * recall / (precision + recall)


def qaeval_score(gold_text: str, generated_tokens: Sequence[str],
                 qg: QuestionGenerator, qa: QuestionAnswerer,
                 provider: SyntacticProvider) -> float | None:
    """QAEval-style score: one question per gold-summary NP answered against
    the generated summary; mean token F1 with unanswerable questions scoring
    0. None when the gold summary has no NPs (example skipped)."""
    gold_doc = annotate(gold_text, provider, doc_id="gold")
    phrases = gold_doc.phrases_of_type("np")
    if not phrases:
        return None
    generated_text = detokenize(generated_tokens)
    scores = []
    for phrase in phrases:
        span = phrase.span
        sent_idx = gold_doc.sentence_index_of(span.start)
        sent = gold_doc.sentences[sent_idx]
        sent_tokens = gold_doc.sentence_tokens(sent_idx)
        sent_text = detokenize(sent_tokens)
        surface = span_surface(gold_doc.tokens, span)
        offsets = _span_char_offsets(sent_tokens, sent_text,
                                     span.start - sent.start,
                                     span.end - sent.start)
        question = qg.generate(sent_text, surface, offsets)
        prediction = qa.answer(question, generated_text)
        if prediction.is_answerable:
            scores.append(answer_token_f1(prediction.answer_text, surface))
        else:
            scores.append(0.0)
    return sum(scores) / len(scores)


def question_recall(labels: Sequence[SpanLabel], doc: Document,
                    generated_text: str, qa: QuestionAnswerer) -> float:
    """Fraction of the marked spans' questions that the generated summary
    answers correctly."""
    if not labels:
        raise ValueError("question_recall needs at least one labeled span")
    hits = 0
    for label in labels:
        if not label.question:
            raise ValueError(
                f"span ({label.span.start}, {label.span.end}) carries no question"
            )
        prediction = qa.answer(label.question, generated_text)
        surface = span_surface(doc.tokens, label.span)
        if prediction.is_answerable and answer_is_correct(prediction.answer_text,
                                                          surface):
            hits += 1
    return hits / len(labels)


def k_length_ratio(k: int, generated_tokens: Sequence[str]) -> float:
    """Marked-span count over summary length; larger is more concise."""
    if not generated_tokens:
        raise ValueError("generated summary is empty")
    return k / len(generated_tokens)


def normalized_surface(doc: Document, span) -> str:
    return " ".join(normalize_tokens(span_surface(doc.tokens, span)))


def kth_occurrence_probe(doc: Document, ranked: Sequence[SpanScore],
                         checkpoint: GenerationCheckpoint,
                         qg: QuestionGenerator, qa: QuestionAnswerer, k: int,
                         decode: DecodeConfig | None = None) -> dict | None:
    """Mark only the kth document occurrence of the top-ranked span's
    surface string, generate, and check whether that occurrence's question
    is answered. None when the surface has fewer than k occurrences."""
    if not ranked:
        return None
    surface = normalized_surface(doc, ranked[0].span)
    occurrences = [p.span for p in doc.phrases_of_type("np")
                   if normalized_surface(doc, p.span) == surface]
    occurrences.sort()
    if len(occurrences) < k:
        return None
    target = occurrences[k - 1]
    sent_idx = doc.sentence_index_of(target.start)
    sent = doc.sentences[sent_idx]
    sent_tokens = doc.sentence_tokens(sent_idx)
    sent_text = detokenize(sent_tokens)
    target_surface = span_surface(doc.tokens, target)
    offsets = _span_char_offsets(sent_tokens, sent_text,
                                 target.start - sent.start,
                                 target.end - sent.start)
    question = qg.generate(sent_text, target_surface, offsets)
    result = summarize(doc, [target], checkpoint, decode)
    prediction = qa.answer(question, result.summary_text)
    answered = (prediction.is_answerable
                and answer_is_correct(prediction.answer_text, target_surface))
    return {
        "k": k,
        "surface": surface,
        "question": question,
        "answered": answered,
        "answer": prediction.answer_text,
        "summary_length": len(result.summary_tokens),
    }


# --------------------------------------------------------------------------
# Run-level evaluation
# --------------------------------------------------------------------------

@dataclass
class EvalConfig:
    with_qa_metrics: bool = True
    metadata: dict = field(default_factory=dict)
    # Optional external metrics (e.g. an embedding-similarity scorer):
    # name -> fn(generated_tokens, reference_example) -> float | None.
    # Kept as a plugin hook; nothing heavier ships with the package.
    extra_metrics: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    config: dict
    corpus: dict
    examples: list[dict]

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "corpus": self.corpus,
                           "examples": self.examples}, indent=2)

    def write(self, json_path: str | Path, csv_path: str | Path | None = None) -> None:
        json_path = Path(json_path)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(self.to_json())
        if csv_path is None:
            return
        fields = ["id"] + sorted({key for row in self.examples
                                  for key in row if key != "id"})
        with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.examples:
                writer.writerow(row)


def question_for_span(label: SpanLabel | None, doc: Document, span,
                      qg: QuestionGenerator) -> str:
    """The label's stored question when present, else one generated from the
    span's sentence."""
    if label is not None and label.question:
        return label.question
    sent_idx = doc.sentence_index_of(span.start)
    sent = doc.sentences[sent_idx]
    sent_tokens = doc.sentence_tokens(sent_idx)
    sent_text = detokenize(sent_tokens)
    surface = span_surface(doc.tokens, span)
    offsets = _span_char_offsets(sent_tokens, sent_text,
                                 span.start - sent.start, span.end - sent.start)
    return qg.generate(sent_text, surface, offsets)


def evaluate_run(results: Sequence[SummaryResult],
                 references: Sequence[AnnotatedExample],
                 config: EvalConfig | None = None,
                 qg: QuestionGenerator | None = None,
                 qa: QuestionAnswerer | None = None,
                 provider: SyntacticProvider | None = None) -> EvalReport:
    """Per-example metrics and corpus means for a generation run.

    Inputs are joined by example id; any orphan on either side is an error.
    QA-based metrics require the qg/qa/provider adapters and are skipped
    (with a warning) otherwise.
    """
    config = config or EvalConfig()
    by_id = {ex.id: ex for ex in references}
    result_ids = [r.doc_id for r in results]
    missing_refs = [i for i in result_ids if i not in by_id]
    unused_refs = sorted(set(by_id) - set(result_ids))
    if missing_refs or unused_refs:
        raise ValueError(
            f"id mismatch between generated output and references; "
            f"no reference for {missing_refs!r}, no output for {unused_refs!r}"
        )
    qa_enabled = config.with_qa_metrics and qg is not None and qa is not None
    if config.with_qa_metrics and not qa_enabled:
        logger.warning("QA metrics disabled: missing qg/qa adapters")

    rows = []
    for result in sorted(results, key=lambda r: r.doc_id):
        ref = by_id[result.doc_id]
        doc = ref.document
        generated = result.summary_tokens
        row: dict = {
            "id": result.doc_id,
            "rouge1_f1": rouge_1(generated, ref.summary.tokens).f1,
            "rouge2_f1": rouge_2(generated, ref.summary.tokens).f1,
            "rougeL_f1": rouge_l(generated, ref.summary.tokens).f1,
            "summary_length_tokens": len(generated),
        }
        row["k_length_ratio"] = (k_length_ratio(len(result.spans), generated)
                                 if generated and result.spans else None)
        if qa_enabled and provider is not None and ref.summary.text.strip():
            row["qaeval_f1"] = qaeval_score(ref.summary.text, generated,
                                            qg, qa, provider)
        if qa_enabled and result.spans:
            labels_by_span = {l.span: l for l in ref.oracle_spans}
            labels = []
            for span in result.spans:
                label = labels_by_span.get(span)
                question = question_for_span(label, doc, span, qg)
                labels.append(SpanLabel(span=span, salient=True, question=question))
            row["question_recall"] = question_recall(
                labels, doc, detokenize(generated), qa)
        for name, metric in config.extra_metrics.items():
            row[name] = metric(generated, ref)
        rows.append(row)

    metric_keys = sorted({key for row in rows for key in row if key != "id"})
    corpus = {}
    for key in metric_keys:
        values = [row[key] for row in rows if row.get(key) is not None]
        corpus[key] = sum(values) / len(values) if values else None
        corpus[f"{key}_n"] = len(values)
    return EvalReport(config={"with_qa_metrics": qa_enabled, **config.metadata},
                      corpus=corpus, examples=rows)


def paired_permutation_test(report_a: EvalReport | dict,
                            report_b: EvalReport | dict, metric: str,
                            n_resamples: int = 10000, seed: int = 13) -> dict:
    """Two-sided paired sign-flip permutation test on a per-example metric
    across two evaluation reports (objects or parsed report JSON). Examples
    are paired by id; the p-value uses add-one smoothing."""
    import numpy as np

    def rows_of(report):
        return report.examples if isinstance(report, EvalReport) \
            else report["examples"]

    a_by_id = {row["id"]: row.get(metric) for row in rows_of(report_a)}
    b_by_id = {row["id"]: row.get(metric) for row in rows_of(report_b)}
    shared = sorted(set(a_by_id) & set(b_by_id))
    diffs = np.array([a_by_id[i] - b_by_id[i] for i in shared
                      if a_by_id[i] is not None and b_by_id[i] is not None])
    if diffs.size == 0:
        raise ValueError(f"no paired values for metric {metric!r}")
    observed = float(diffs.mean())
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(n_resamples, diffs.size))
    resampled = (signs * diffs).mean(axis=1)
    hits = int((np.abs(resampled) >= abs(observed)).sum())
    return {"metric": metric, "n_pairs": int(diffs.size),
            "mean_difference": observed,
            "p_value": (hits + 1) / (n_resamples + 1)}

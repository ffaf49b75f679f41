"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them). Tolerances are pinned here and
nowhere else."""

import math
import random
import time

from click.testing import CliRunner
from fastapi.testclient import TestClient

from helpers import (
    brute_lcs,
    brute_ngram_overlap,
    f1 as oracle_f1,
    random_document,
    random_nonoverlapping_spans,
    random_qa_example,
    random_summary,
    random_tokens,
)
from spansteer.annotation import annotate
from spansteer.augmentation import (
    augment_example,
    build_mapping,
    remove_unsupported_sentences,
)
from spansteer.classifier import (
    ClassifierConfig,
    ClassifierHead,
    balanced_bce_grad,
    balanced_bce_loss,
    predict_top_k,
    train_classifier,
    TinyTrainableEncoder,
)
from spansteer.cli import main as cli_main
from spansteer.corpus import save_corpus, span_surface
from spansteer.evaluation import k_length_ratio, question_recall
from spansteer.fixtures import (
    augmentation_example,
    occurrence_example,
    repeated_surface_example,
)
from spansteer.generation import (
    DecodeConfig,
    EchoAdapter,
    GenerationCheckpoint,
    GeneratorConfig,
    TinySeq2SeqAdapter,
    summarize,
    train_generator,
)
from spansteer.marking import build_generation_training_set, mark_spans, strip_markers
from spansteer.oracles import greedy_rouge2_selection, qa_salience
from spansteer.qa import LexicalStubAnswerer, TemplateStubGenerator
from spansteer.rouge import rouge_1, rouge_2, rouge_l, rouge_n


def check(name: str, condition: bool, detail: str = "") -> None:
    line = f"{'PASS' if condition else 'FAIL'}: {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert condition, line


# ---------------------------------------------------------------------------
# Criterion 1: ROUGE fixture suite
# ---------------------------------------------------------------------------

ROUGE_FIXTURES = [
    # (metric, candidate, reference, precision, recall)
    ("r1", ["the", "cat", "sat"], ["the", "cat", "ran"], 2 / 3, 2 / 3),
    ("r1", ["a", "b", "c"], ["a", "b", "c"], 1.0, 1.0),
    ("r1", ["x", "y"], ["p", "q"], 0.0, 0.0),
    ("r1", ["a", "a", "b"], ["a", "b", "b"], 2 / 3, 2 / 3),
    ("r1", ["s", "t", "u", "v"], ["t", "u"], 1 / 2, 1.0),
    ("r2", ["a", "b", "c"], ["a", "b", "c"], 1.0, 1.0),
    ("r2", ["a", "b", "a", "b"], ["a", "b"], 1 / 3, 1.0),
    ("r2", ["a", "b", "c", "d"], ["c", "d"], 1 / 3, 1.0),
    ("r2", ["m", "n", "o"], ["m", "x", "o"], 0.0, 0.0),
    ("rl", ["a", "b", "c"], ["a", "c"], 2 / 3, 1.0),
    ("rl", ["x", "a", "y", "b"], ["a", "b"], 1 / 2, 1.0),
    ("rl", ["b", "a"], ["a", "b"], 1 / 2, 1 / 2),
    ("rl", ["a", "b", "c"], ["a", "b", "c"], 1.0, 1.0),
]


def test_criterion_rouge_fixture_suite():
    start = time.monotonic()
    for metric, cand, ref, p, r in ROUGE_FIXTURES:
        score = {"r1": rouge_1, "r2": rouge_2, "rl": rouge_l}[metric](cand, ref)
        assert abs(score.precision - p) < 1e-9, (metric, cand, ref)
        assert abs(score.recall - r) < 1e-9
        assert abs(score.f1 - oracle_f1(p, r)) < 1e-9

    rng = random.Random(13)
    for _ in range(1000):
        tokens = random_tokens(rng, rng.randint(1, 15))
        other = random_tokens(rng, rng.randint(1, 15), vocab=["zz", "qq", "jj"])
        assert rouge_n(tokens, tokens, 1).f1 == 1.0
        if len(tokens) >= 2:
            assert rouge_n(tokens, tokens, 2).f1 == 1.0
        assert rouge_l(tokens, tokens).f1 == 1.0
        assert rouge_n(tokens, other, 1).f1 == 0.0  # disjoint vocabularies
        assert rouge_l(tokens, other).f1 == 0.0
        ref = random_tokens(rng, rng.randint(1, 15))
        assert rouge_l(tokens, ref).f1 <= rouge_1(tokens, ref).f1 + 1e-12
        overlap, nc, nr = brute_ngram_overlap(tokens, ref, 1)
        assert abs(rouge_1(tokens, ref).precision - overlap / nc) < 1e-9
        assert abs(rouge_l(tokens, ref).recall
                   - brute_lcs(tokens, ref) / len(ref)) < 1e-9
    elapsed = time.monotonic() - start
    check("ROUGE fixture suite (13 hand fixtures @1e-9, 1000 random property "
          "checks)", elapsed < 10, f"{elapsed:.2f}s")


# ---------------------------------------------------------------------------
# Criterion 2: greedy oracle equals exhaustive per-step argmax
# ---------------------------------------------------------------------------

def exhaustive_greedy_steps(doc, summary, k):
    selected, best = [], 0.0
    for _ in range(k):
        scored = []
        for i in range(len(doc.sentences)):
            if i in selected:
                continue
            chosen = sorted(selected + [i])
            tokens = [t for j in chosen for t in doc.sentence_tokens(j)]
            scored.append((rouge_2(tokens, summary.tokens).f1, i))
        gaining = [(s, i) for s, i in scored if s > best]
        if not gaining:
            break
        top = max(s for s, _ in gaining)
        pick = min(i for s, i in gaining if s == top)
        selected.append(pick)
        best = top
    return selected


def test_criterion_greedy_oracle_correctness():
    start = time.monotonic()
    rng = random.Random(13)
    for _ in range(200):
        doc = random_document(rng, max_tokens=36, max_sentences=8)
        summary = random_summary(rng)
        k = rng.randint(1, 6)
        assert (greedy_rouge2_selection(doc, summary, k)
                == exhaustive_greedy_steps(doc, summary, k))
    elapsed = time.monotonic() - start
    check("greedy sentence oracle matches exhaustive per-step argmax on 200 "
          "random documents", elapsed < 60, f"{elapsed:.2f}s")


# ---------------------------------------------------------------------------
# Criterion 3: QA labeling occurrence sensitivity + byte determinism
# ---------------------------------------------------------------------------

def test_criterion_qa_occurrence_sensitivity(tmp_path):
    ex = occurrence_example()
    labels = qa_salience(ex.document, ex.summary,
                         TemplateStubGenerator(), LexicalStubAnswerer())
    sierra = [l.salient for l in labels
              if ex.document.span_tokens(l.span) == ("Sierra", "Leone")]
    assert sierra == [True, False]

    raw = tmp_path / "raw.jsonl"
    save_corpus([occurrence_example(), repeated_surface_example()], raw)
    runner = CliRunner()
    outputs = []
    for i in range(3):
        out = tmp_path / f"ann{i}.jsonl"
        result = runner.invoke(cli_main, [
            "annotate", "--span-type", "qa", "--output-dir",
            str(tmp_path / f"run{i}"), "--input", str(raw), "--output", str(out)])
        assert result.exit_code == 0, result.output
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    check("QA labeling: identical surfaces get (salient, non-salient); "
          "annotate byte-identical across 3 runs", True)


# ---------------------------------------------------------------------------
# Criterion 4: marking round trip
# ---------------------------------------------------------------------------

def test_criterion_marking_round_trip():
    rng = random.Random(13)
    for _ in range(1000):
        n = rng.randint(1, 40)
        tokens = random_tokens(rng, n)
        spans = random_nonoverlapping_spans(rng, n)
        marked = mark_spans(tokens, spans)
        assert list(strip_markers(marked)) == tokens
        assert marked.marker_count() == 2 * len(spans)
    check("marking round trip + marker count on 1000 random pairs", True)


# ---------------------------------------------------------------------------
# Criterion 5: loss properties
# ---------------------------------------------------------------------------

def test_criterion_loss_properties():
    # ln 2 case
    loss = balanced_bce_loss([0.0, 0.0, 0.0, 0.0], [True, False, False, False])
    assert abs(loss - math.log(2)) < 1e-9

    # duplication invariance, bitwise exact
    rng = random.Random(13)
    for _ in range(100):
        n_pos, n_neg = rng.randint(1, 5), rng.randint(1, 5)
        scores = [rng.uniform(-8, 8) for _ in range(n_pos + n_neg)]
        labels = [True] * n_pos + [False] * n_neg
        base = balanced_bce_loss(scores, labels)
        for m in (2, 5):
            assert balanced_bce_loss(
                scores[:n_pos] + scores[n_pos:] * m,
                [True] * n_pos + [False] * (n_neg * m)) == base

    # gradient vs central finite differences, 50 random instances
    h = 1e-6
    for _ in range(50):
        n = rng.randint(2, 9)
        scores = [rng.uniform(-4, 4) for _ in range(n)]
        labels = [rng.random() < 0.5 for _ in range(n)]
        if not any(labels):
            labels[rng.randrange(n)] = True
        grad = balanced_bce_grad(scores, labels)
        for i in range(n):
            up = scores.copy(); up[i] += h
            down = scores.copy(); down[i] -= h
            fd = (balanced_bce_loss(up, labels)
                  - balanced_bce_loss(down, labels)) / (2 * h)
            assert abs(grad[i] - fd) / max(abs(fd), 1e-8) < 1e-4
    check("balanced BCE: ln2 case @1e-9, exact m-fold duplication invariance "
          "(m=2,5), FD gradients @1e-4 on 50 instances", True)


# ---------------------------------------------------------------------------
# Criterion 6: augmentation laws
# ---------------------------------------------------------------------------

def test_criterion_augmentation_laws(qg, qa):
    rng = random.Random(13)
    for i in range(100):
        ex = random_qa_example(rng, doc_id=f"acc-{i}")
        mapping = build_mapping(ex.oracle_spans, ex.summary)
        out = augment_example(ex)
        assert len(out) == len(mapping.supported_sentences())  # count law
        for produced in out:
            inner = build_mapping(produced.oracle_spans, produced.summary)
            assert inner.supported_sentences() == list(
                range(len(produced.summary.sentences)))  # full support
            assert remove_unsupported_sentences(produced, inner) is produced
        for smaller, larger in zip(out, out[1:]):  # prefix monotonicity
            assert {l.span for l in smaller.salient_labels()} <= \
                   {l.span for l in larger.salient_labels()}
            assert larger.summary.tokens[: len(smaller.summary.tokens)] \
                == smaller.summary.tokens

    from spansteer.oracles import label_example
    labeled = label_example(augmentation_example(), "qa", qg=qg, qa=qa)
    out = augment_example(labeled)
    assert [e.augmentation["k"] for e in out] == [1, 2]  # sentence 3 removed
    assert len(out[0].salient_labels()) == 3
    assert len(out[1].salient_labels()) == 5
    assert len(out[1].summary.sentences) == 2
    check("augmentation: full support, count law, monotonicity, idempotence "
          "on 100 random fixtures; unsupported-sentence fixture exact", True)


# ---------------------------------------------------------------------------
# Criterion 7: overfit smoke tests
# ---------------------------------------------------------------------------

def test_criterion_overfit_smoke(labeled_overfit_corpus):
    start = time.monotonic()
    corpus = labeled_overfit_corpus
    assert len(corpus) == 32

    encoder = TinyTrainableEncoder(dim=16, buckets=2048, seed=13)
    clf = train_classifier(corpus, encoder,
                           ClassifierConfig(epochs=3, lr=0.05,
                                            weight_decay=0.0, seed=13))
    best_p1 = max(row["val_precision@1"] for row in clf.history)
    assert len(clf.history) == 3
    assert best_p1 >= 0.95

    pairs = build_generation_training_set(corpus)
    adapter = TinySeq2SeqAdapter(dim=32, hidden=64, seed=13)
    gen = train_generator(pairs, adapter,
                          GeneratorConfig(epochs=5, lr=0.01, seed=13))
    best_r2 = max(row["val_rouge2_f1"] for row in gen.history)
    assert len(gen.history) == 5
    assert best_r2 >= 0.5

    elapsed = time.monotonic() - start
    check("overfit smoke: classifier p@1 >= 0.95 in 3 epochs, generator "
          "R2 >= 0.5 in 5 epochs, runtime <= 15 min",
          elapsed <= 900,
          f"p@1={best_p1:.3f}, R2={best_r2:.3f}, {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 8: controllability direction check
# ---------------------------------------------------------------------------

def test_criterion_controllability_direction(qg, qa):
    ex = repeated_surface_example()
    doc = ex.document
    spans = [p.span for p in doc.phrases_of_type("np")
             if doc.span_tokens(p.span) == ("Oslo",)][1:2]
    assert spans, "fixture must contain a markable span"
    questions = []
    for span in spans:
        sent_idx = doc.sentence_index_of(span.start)
        from spansteer.corpus import detokenize
        from spansteer.oracles import _span_char_offsets
        sent = doc.sentences[sent_idx]
        sent_tokens = doc.sentence_tokens(sent_idx)
        sent_text = detokenize(sent_tokens)
        offsets = _span_char_offsets(sent_tokens, sent_text,
                                     span.start - sent.start,
                                     span.end - sent.start)
        questions.append(qg.generate(sent_text, span_surface(doc.tokens, span),
                                     offsets))
    from spansteer.corpus import SpanLabel

    labels = [SpanLabel(span=s, salient=True, question=q)
              for s, q in zip(spans, questions)]

    verbose = GenerationCheckpoint(adapter=EchoAdapter(unmarked_lead=2),
                                   decode_defaults=DecodeConfig(beam=1))
    concise = GenerationCheckpoint(adapter=EchoAdapter(unmarked_lead=0),
                                   decode_defaults=DecodeConfig(beam=1))
    results = {}
    for name, checkpoint in (("verbose", verbose), ("concise", concise)):
        out = summarize(doc, spans, checkpoint)
        recall = question_recall(labels, doc, out.summary_text, qa)
        ratio = k_length_ratio(len(spans), out.summary_tokens)
        results[name] = (recall, ratio, len(out.summary_tokens))
    assert results["verbose"][0] == 1.0
    assert results["concise"][0] == 1.0
    assert results["concise"][2] < results["verbose"][2]
    assert results["concise"][1] > results["verbose"][1]
    check("controllability: question recall 1.0 with echo generator; "
          "k/length ratio strictly larger with fewer unmarked sentences",
          True,
          f"ratios {results['verbose'][1]:.3f} -> {results['concise'][1]:.3f}")


# ---------------------------------------------------------------------------
# Criterion 9: service contract
# ---------------------------------------------------------------------------

def test_criterion_service_contract():
    from spansteer.classifier import HashedFrozenEncoder
    from spansteer.annotation import FixtureProvider
    from spansteer.service import ServiceComponents, create_app

    components = ServiceComponents(
        provider=FixtureProvider(),
        encoder=HashedFrozenEncoder(dim=8, seed=13),
        head=ClassifierHead.init(8, seed=13),
        generator=GenerationCheckpoint(adapter=EchoAdapter(),
                                       decode_defaults=DecodeConfig(beam=1)),
        qg=TemplateStubGenerator(), qa=LexicalStubAnswerer(), max_chars=500)
    client = TestClient(create_app(components))

    text = "Orla met Finn in Oslo. the Summit Hall hosted Oslo in March."
    payload = client.post("/analyze", json={"text": text}).json()
    doc = annotate(text, components.provider, doc_id="check")
    candidates = [p.span for p in doc.phrases_of_type("np")]
    ranked = predict_top_k(doc, candidates, len(candidates),
                           components.encoder, components.head)
    assert [(s["start"], s["end"], round(s["score"], 12))
            for s in payload["spans"]] == \
        [(r.span.start, r.span.end, round(r.score, 12)) for r in ranked]

    body = {"session_id": payload["session_id"], "span_ids": [0, 1]}
    first = client.post("/generate", json=body)
    second = client.post("/generate", json=body)
    assert first.status_code == 200 and first.json() == second.json()

    assert client.post("/analyze", json={"text": " "}).status_code == 400
    assert client.post("/analyze",
                       json={"text": "x" * 600}).status_code == 413
    assert client.post("/generate", json={"session_id": "none",
                                          "span_ids": []}).status_code == 404
    assert client.post("/generate", json={"session_id": payload["session_id"],
                                          "span_ids": [999]}).status_code == 422
    assert client.get("/health").json()["status"] == "ok"
    check("service: /analyze equals predict_top_k, /generate idempotent, "
          "error codes 400/413/404/422", True)

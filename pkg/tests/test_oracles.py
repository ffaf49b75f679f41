import random

import pytest

from helpers import random_document, random_summary
from spansteer.corpus import (
    Document,
    GoldSummary,
    Phrase,
    TokenSpan,
)
from spansteer.fixtures import make_example, occurrence_example
from spansteer.oracles import (
    greedy_rouge2_selection,
    greedy_rouge2_sentences,
    label_corpus,
    label_example,
    lexical_first_occurrence,
    qa_salience,
)
from spansteer.qa import AdapterError
from spansteer.rouge import rouge_2


def doc_from_sentences(sentences: list[list[str]], doc_id="d") -> Document:
    tokens = [t for sent in sentences for t in sent]
    spans = []
    start = 0
    for sent in sentences:
        spans.append(TokenSpan(start, start + len(sent) - 1))
        start += len(sent)
    return Document(id=doc_id, text=" ".join(tokens), tokens=tuple(tokens),
                    sentences=tuple(spans))


def summary_from_tokens(tokens: list[str]) -> GoldSummary:
    return GoldSummary(text=" ".join(tokens), tokens=tuple(tokens),
                       sentences=(TokenSpan(0, len(tokens) - 1),))


# ---------------------------------------------------------------------------
# Greedy ROUGE-2 sentence oracle
# ---------------------------------------------------------------------------

def exhaustive_greedy_steps(doc: Document, summary: GoldSummary,
                            k: int) -> list[int]:
    """Independent oracle: at each step scan every remaining sentence and
    take the argmax (ties -> smallest index), stopping without strict gain."""
    selected: list[int] = []
    best = 0.0
    for _ in range(k):
        candidates = []
        for i in range(len(doc.sentences)):
            if i in selected:
                continue
            chosen = sorted(selected + [i])
            tokens = [t for j in chosen for t in doc.sentence_tokens(j)]
            candidates.append((rouge_2(tokens, summary.tokens).f1, i))
        gaining = [(score, i) for score, i in candidates if score > best]
        if not gaining:
            break
        top = max(score for score, _ in gaining)
        step = min(i for score, i in gaining if score == top)
        selected.append(step)
        best = top
    return selected


def test_exact_match_sentence_selected_first():
    doc = doc_from_sentences([["x", "y", "z"], ["q", "r"],
                              ["the", "goal", "here"], ["m", "n"]])
    summary = summary_from_tokens(["the", "goal", "here"])
    assert greedy_rouge2_sentences(doc, summary, 1) == [TokenSpan(5, 7)]


def test_no_shared_bigram_stops_immediately():
    doc = doc_from_sentences([["a", "b"], ["c", "d"]])
    summary = summary_from_tokens(["b", "c"])  # bigram (b, c) crosses sentences
    assert greedy_rouge2_sentences(doc, summary, 3) == []


def test_four_sentence_doc_matches_exhaustive_scan():
    doc = doc_from_sentences([
        ["alpha", "beta", "gamma"],
        ["beta", "gamma", "delta"],
        ["delta", "eps", "zeta"],
        ["eta", "theta"],
    ])
    summary = summary_from_tokens(["beta", "gamma", "delta", "eps"])
    assert (greedy_rouge2_selection(doc, summary, 2)
            == exhaustive_greedy_steps(doc, summary, 2))


def test_greedy_matches_exhaustive_on_random_documents():
    rng = random.Random(13)
    for _ in range(200):
        doc = random_document(rng, max_tokens=32, max_sentences=8)
        summary = random_summary(rng)
        k = rng.randint(1, 5)
        assert (greedy_rouge2_selection(doc, summary, k)
                == exhaustive_greedy_steps(doc, summary, k))


def test_greedy_output_sorted_unique_and_prefix_consistent():
    rng = random.Random(29)
    for _ in range(50):
        doc = random_document(rng, max_tokens=30, max_sentences=6)
        summary = random_summary(rng)
        selection = greedy_rouge2_selection(doc, summary, 4)
        spans = greedy_rouge2_sentences(doc, summary, 4)
        assert spans == sorted(set(spans))
        assert len(spans) <= 4
        for j in range(1, len(selection) + 1):
            assert (greedy_rouge2_sentences(doc, summary, j)
                    == sorted(doc.sentences[i] for i in selection[:j]))


def test_greedy_requires_positive_k():
    doc = doc_from_sentences([["a", "b"]])
    with pytest.raises(ValueError):
        greedy_rouge2_sentences(doc, summary_from_tokens(["a", "b"]), 0)


# ---------------------------------------------------------------------------
# Lexical first-occurrence labeling
# ---------------------------------------------------------------------------

def lexical_doc():
    tokens = ("Sierra", "Leone", "sent", "aid", ".",
              "Aid", "reached", "Sierra", "Leone", ".")
    return Document(
        id="lex", text=" ".join(tokens), tokens=tokens,
        sentences=(TokenSpan(0, 4), TokenSpan(5, 9)),
        phrases=(
            Phrase(TokenSpan(0, 1), "entity"),
            Phrase(TokenSpan(5, 5), "entity"),
            Phrase(TokenSpan(7, 8), "entity"),
        ),
    )


def test_first_occurrence_only_is_salient():
    doc = lexical_doc()
    summary = summary_from_tokens(["help", "for", "sierra", "leone"])
    labels = lexical_first_occurrence(doc, summary, "entity")
    by_span = {l.span: l.salient for l in labels}
    assert by_span == {TokenSpan(0, 1): True, TokenSpan(5, 5): False,
                       TokenSpan(7, 8): False}


def test_absent_phrase_not_salient():
    doc = lexical_doc()
    summary = summary_from_tokens(["nothing", "matches"])
    labels = lexical_first_occurrence(doc, summary, "entity")
    assert all(not l.salient for l in labels)


def test_two_distinct_phrases_both_first_occurrences():
    tokens = ("Accra", "hosts", "Kofi", ".", "Kofi", "left", "Accra", ".")
    doc = Document(
        id="two", text=" ".join(tokens), tokens=tokens,
        sentences=(TokenSpan(0, 3), TokenSpan(4, 7)),
        phrases=(Phrase(TokenSpan(0, 0), "entity"), Phrase(TokenSpan(2, 2), "entity"),
                 Phrase(TokenSpan(4, 4), "entity"), Phrase(TokenSpan(6, 6), "entity")),
    )
    summary = summary_from_tokens(["kofi", "visited", "accra"])
    labels = lexical_first_occurrence(doc, summary, "entity")
    salient = {l.span for l in labels if l.salient}
    assert salient == {TokenSpan(0, 0), TokenSpan(2, 2)}
    assert sum(l.salient for l in labels) == 2


def test_lexical_match_is_token_subsequence_not_bag():
    tokens = ("New", "York", "rules", ".")
    doc = Document(id="ny", text=" ".join(tokens), tokens=tokens,
                   sentences=(TokenSpan(0, 3),),
                   phrases=(Phrase(TokenSpan(0, 1), "entity"),))
    scrambled = summary_from_tokens(["york", "new"])
    assert not any(l.salient
                   for l in lexical_first_occurrence(doc, scrambled, "entity"))
    verbatim = summary_from_tokens(["in", "new", "york"])
    assert any(l.salient
               for l in lexical_first_occurrence(doc, verbatim, "entity"))


def test_at_most_one_occurrence_salient_per_surface():
    rng = random.Random(31)
    for _ in range(50):
        doc = random_document(rng, max_tokens=24, max_sentences=4)
        phrases = []
        for sent in doc.sentences:
            phrases.append(Phrase(TokenSpan(sent.start, sent.start), "np"))
        doc = Document(id=doc.id, text=doc.text, tokens=doc.tokens,
                       sentences=doc.sentences, phrases=tuple(phrases))
        summary = random_summary(rng)
        labels = lexical_first_occurrence(doc, summary, "np")
        per_surface = {}
        for label in labels:
            surface = tuple(t.lower() for t in doc.span_tokens(label.span))
            per_surface.setdefault(surface, 0)
            per_surface[surface] += label.salient
        assert all(count <= 1 for count in per_surface.values())


# ---------------------------------------------------------------------------
# QA-based labeling
# ---------------------------------------------------------------------------

def test_occurrence_fixture_distinguishes_instances(qg, qa):
    ex = occurrence_example()
    labels = qa_salience(ex.document, ex.summary, qg, qa)
    assert len(labels) == len(ex.document.phrases_of_type("np"))
    sierra = [l for l in labels
              if ex.document.span_tokens(l.span) == ("Sierra", "Leone")]
    assert [l.salient for l in sierra] == [True, False]
    first = sierra[0]
    assert first.question and first.predicted_answer
    assert first.summary_sentence == 0
    second = sierra[1]
    assert second.question is not None
    assert second.predicted_answer is None and second.summary_sentence is None


def test_empty_summary_nothing_salient(qg, qa):
    ex = occurrence_example()
    empty = GoldSummary(text="", tokens=(), sentences=())
    labels = qa_salience(ex.document, empty, qg, qa)
    assert labels and all(not l.salient for l in labels)


def test_answerable_but_wrong_answer_is_not_salient(qg):
    ex = occurrence_example()

    class WrongAnswerer:
        def answer(self, question, context):
            from spansteer.qa import QAPrediction
            return QAPrediction(True, "completely unrelated words", 1.0)

    labels = qa_salience(ex.document, ex.summary, qg, WrongAnswerer())
    assert all(not l.salient for l in labels)


def test_one_label_per_candidate(qg, qa):
    ex = occurrence_example()
    labels = qa_salience(ex.document, ex.summary, qg, qa)
    assert [l.span for l in labels] == [p.span for p in
                                        ex.document.phrases_of_type("np")]


def test_adapter_failure_identifies_stage(qa):
    ex = occurrence_example()

    class BrokenGenerator:
        def generate(self, *args):
            raise RuntimeError("backend down")

    with pytest.raises(AdapterError, match="question generation failed"):
        qa_salience(ex.document, ex.summary, BrokenGenerator(), qa)

    class BrokenAnswerer:
        def answer(self, *args):
            raise RuntimeError("backend down")

    from spansteer.qa import TemplateStubGenerator
    with pytest.raises(AdapterError, match="answering failed"):
        qa_salience(ex.document, ex.summary, TemplateStubGenerator(),
                    BrokenAnswerer())


def test_label_example_sentence_strategy():
    doc_text = "Aid reached the port. Storms delayed the convoy. Crowds cheered."
    ex = make_example(doc_text, "Aid reached the port.")
    labeled = label_example(ex, "sentence", k=2)
    assert labeled.span_type == "sentence"
    assert len(labeled.oracle_spans) == len(ex.document.sentences)
    assert sum(l.salient for l in labeled.oracle_spans) <= 2


def test_label_corpus_parallel_matches_serial(qg, qa):
    examples = [occurrence_example(), make_example(
        "Nora Imon fixed the bridge. the crew slept.", "Nora Imon fixed the bridge.")]
    serial = list(label_corpus(examples, "qa", qg=qg, qa=qa, workers=1))
    parallel = list(label_corpus(examples, "qa", qg=qg, qa=qa, workers=4))
    assert serial == parallel

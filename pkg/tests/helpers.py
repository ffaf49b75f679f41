"""Shared test utilities: independent metric oracles and random fixture
generators. Oracles here are deliberately naive (enumeration, quadratic DP)
so they stay independent of the library implementations they check."""

from __future__ import annotations

import random
from collections import Counter

from spansteer.corpus import (
    AnnotatedExample,
    Document,
    GoldSummary,
    Phrase,
    SpanLabel,
    TokenSpan,
)

WORDS = ["ash", "bay", "cove", "dune", "elm", "fen", "gale", "holt",
         "isle", "jet", "kelp", "loch", "mire", "nook", "oak", "pond"]


# ---------------------------------------------------------------------------
# Independent metric oracles
# ---------------------------------------------------------------------------

def brute_lcs(a: list[str], b: list[str]) -> int:
    """Reference LCS by full quadratic table (no rolling rows)."""
    a = [t.lower() for t in a]
    b = [t.lower() for t in b]
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def brute_ngram_overlap(cand: list[str], ref: list[str], n: int) -> tuple[int, int, int]:
    """(clipped overlap, candidate n-gram count, reference n-gram count)."""
    def grams(tokens):
        low = [t.lower() for t in tokens]
        return Counter(tuple(low[i:i + n]) for i in range(len(low) - n + 1))
    c, r = grams(cand), grams(ref)
    overlap = sum(min(c[g], r[g]) for g in c)
    return overlap, sum(c.values()), sum(r.values())


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


# ---------------------------------------------------------------------------
# Random structure generators
# ---------------------------------------------------------------------------

def random_tokens(rng: random.Random, n: int, vocab=WORDS) -> list[str]:
    return [rng.choice(vocab) for _ in range(n)]


def random_sentence_partition(rng: random.Random, n_tokens: int,
                              max_sentences: int = 8) -> list[TokenSpan]:
    cuts = sorted(rng.sample(range(1, n_tokens),
                             min(rng.randint(0, max_sentences - 1), n_tokens - 1))
                  ) if n_tokens > 1 else []
    bounds = [0] + cuts + [n_tokens]
    return [TokenSpan(a, b - 1) for a, b in zip(bounds, bounds[1:])]


def random_document(rng: random.Random, doc_id: str = "doc",
                    min_tokens: int = 4, max_tokens: int = 40,
                    max_sentences: int = 8) -> Document:
    n = rng.randint(min_tokens, max_tokens)
    tokens = random_tokens(rng, n)
    sentences = random_sentence_partition(rng, n, max_sentences)
    return Document(id=doc_id, text=" ".join(tokens), tokens=tuple(tokens),
                    sentences=tuple(sentences))


def random_summary(rng: random.Random, min_tokens: int = 2,
                   max_tokens: int = 20, max_sentences: int = 4) -> GoldSummary:
    n = rng.randint(min_tokens, max_tokens)
    tokens = random_tokens(rng, n)
    sentences = random_sentence_partition(rng, n, max_sentences)
    return GoldSummary(text=" ".join(tokens), tokens=tuple(tokens),
                       sentences=tuple(sentences))


def random_nonoverlapping_spans(rng: random.Random, n_tokens: int,
                                max_spans: int = 6) -> list[TokenSpan]:
    spans = []
    position = 0
    for _ in range(rng.randint(0, max_spans)):
        if position >= n_tokens:
            break
        start = rng.randint(position, n_tokens - 1)
        end = min(n_tokens - 1, start + rng.randint(0, 3))
        spans.append(TokenSpan(start, end))
        position = end + 2  # at least one-token gap keeps them disjoint
    return spans


def random_qa_example(rng: random.Random, doc_id: str = "doc") -> AnnotatedExample:
    """Annotated example with synthetic QA labels: phrases inside sentences,
    each salient label mapped to a random summary sentence, plus sentences
    that may end up unsupported."""
    doc_n = rng.randint(8, 40)
    tokens = random_tokens(rng, doc_n)
    doc_sentences = random_sentence_partition(rng, doc_n, max_sentences=6)
    phrases = []
    for sent in doc_sentences:
        for _ in range(rng.randint(0, 3)):
            start = rng.randint(sent.start, sent.end)
            end = min(sent.end, start + rng.randint(0, 2))
            phrases.append(TokenSpan(start, end))
    phrases = sorted(set(phrases))
    document = Document(id=doc_id, text=" ".join(tokens), tokens=tuple(tokens),
                        sentences=tuple(doc_sentences),
                        phrases=tuple(Phrase(s, "np") for s in phrases))

    m = rng.randint(1, 4)
    summary_tokens = random_tokens(rng, 3 * m)
    summary_sentences = [TokenSpan(3 * j, 3 * j + 2) for j in range(m)]
    summary = GoldSummary(text=" ".join(summary_tokens),
                          tokens=tuple(summary_tokens),
                          sentences=tuple(summary_sentences))

    labels = []
    for i, span in enumerate(phrases):
        salient = rng.random() < 0.55
        if salient:
            labels.append(SpanLabel(
                span=span, salient=True, question=f"Q[{doc_id}-{i}|key]?",
                predicted_answer="answer", summary_sentence=rng.randrange(m)))
        else:
            labels.append(SpanLabel(span=span, salient=False,
                                    question=f"Q[{doc_id}-{i}|key]?"))
    return AnnotatedExample(document=document, summary=summary,
                            span_type="qa", oracle_spans=tuple(labels))

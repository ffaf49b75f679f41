"""Self-contained ROUGE-1/2/L (F1) over word tokens.

Tokens are lowercased before matching; no stemming. References with multiple
sentences are compared as one concatenated token list. This implementation
is the internal standard for model selection and evaluation; exact parity
with the original Perl scorer is not claimed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @staticmethod
    def from_pr(precision: float, recall: float) -> "RougeScore":
        denom = precision + recall
        f1 = 0.0 if denom == 0 else 2 * precision * recall / denom
        return RougeScore(precision, recall, f1)


ZERO = RougeScore(0.0, 0.0, 0.0)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    lowered = [t.lower() for t in tokens]
    return Counter(tuple(lowered[i : i + n]) for i in range(len(lowered) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    """Clipped n-gram overlap F1 for n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError(f"rouge_n supports n in {{1, 2}}, got {n}")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    if not cand or not ref:
        return ZERO
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return RougeScore.from_pr(overlap / sum(cand.values()),
                              overlap / sum(ref.values()))


def rouge_1(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    return rouge_n(candidate, reference, 1)


def rouge_2(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    return rouge_n(candidate, reference, 2)


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Rolling single-row DP.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Longest-common-subsequence F1."""
    if not candidate or not reference:
        return ZERO
    lcs = _lcs_length([t.lower() for t in candidate],
                      [t.lower() for t in reference])
    return RougeScore.from_pr(lcs / len(candidate), lcs / len(reference))

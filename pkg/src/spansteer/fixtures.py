"""Deterministic fixture corpora for tests, demos, and smoke training runs.

Everything here is derived from the rule-based FixtureProvider, so repeated
construction yields byte-identical examples on any platform.
"""

from __future__ import annotations

from .annotation import FixtureProvider, annotate
from .corpus import AnnotatedExample, GoldSummary

_NAMES = ["Alder", "Brook", "Cedar", "Dune", "Ember", "Fjord", "Grove", "Heath",
          "Iris", "Juniper", "Kestrel", "Larch", "Maple", "Nettle", "Onyx", "Pine",
          "Quill", "Rowan", "Sage", "Thorn", "Umber", "Vale", "Willow", "Xenia",
          "Yarrow", "Zephyr", "Asher", "Birch", "Clove", "Dell", "Elwood", "Fern"]
_PLACES = ["Avon", "Berlin", "Cairo", "Dakar", "Essen", "Fargo", "Galway", "Hanoi",
           "Izmir", "Jaipur", "Kyoto", "Lagos", "Madrid", "Nairobi", "Oslo", "Paris",
           "Quito", "Riga", "Seoul", "Tunis", "Umea", "Vienna", "Warsaw", "Xalapa",
           "Yazd", "Zagreb", "Accra", "Bergen", "Cusco", "Delhi", "Edam", "Faro"]
_VERBS = ["visited", "toured", "reached", "explored"]


def make_summary(text: str) -> GoldSummary:
    out = FixtureProvider().analyze(text)
    return GoldSummary(text=text, tokens=out.tokens, sentences=out.sentences)


def make_example(doc_text: str, summary_text: str,
                 doc_id: str = "doc") -> AnnotatedExample:
    doc = annotate(doc_text, FixtureProvider(), doc_id=doc_id)
    return AnnotatedExample(document=doc, summary=make_summary(summary_text))


def occurrence_example() -> AnnotatedExample:
    """Two occurrences of the same surface string where only the first is
    supported by the gold summary, so QA labeling must tell them apart."""
    doc_text = ("A health worker was infected while treating patients in "
                "Sierra Leone. Sierra Leone is one of the hardest hit countries.")
    summary_text = "The health care worker was infected while in Sierra Leone."
    return make_example(doc_text, summary_text, doc_id="occurrence-fixture")


def augmentation_example() -> AnnotatedExample:
    """Three-sentence gold summary whose last sentence is supported by no
    document span; QA labeling maps three spans to sentence 0 and two to
    sentence 1."""
    doc_text = ("Kestrel Arda opened a museum in Tivat. "
                "the museum was funded by the city. "
                "Arda thanked visitors at the opening.")
    summary_text = ("Kestrel Arda opened a museum in Tivat. "
                    "the museum was funded by the city. "
                    "Critics praised the architecture.")
    return make_example(doc_text, summary_text, doc_id="augmentation-fixture")


def repeated_surface_example() -> AnnotatedExample:
    """One surface string ("Oslo") occurring in three different sentences,
    for occurrence-targeting probes."""
    doc_text = ("Orla met Finn in Oslo. "
                "Oslo hosted the summit during March. "
                "reporters followed Orla around Oslo afterwards.")
    summary_text = "Orla met Finn in Oslo."
    return make_example(doc_text, summary_text, doc_id="repeated-surface-fixture")


def overfit_corpus(n: int = 32) -> list[AnnotatedExample]:
    """Separable name/place documents for training smoke tests.

    Every document marks its name and place tokens as the learnable signal;
    the date and the trailing filler sentence are never salient.
    """
    if not 1 <= n <= len(_NAMES):
        raise ValueError(f"n must be in 1..{len(_NAMES)}")
    corpus = []
    for i in range(n):
        name, place = _NAMES[i], _PLACES[i]
        verb = _VERBS[i % len(_VERBS)]
        doc_text = f"{name} {verb} {place} on Monday. the trip was long and slow."
        summary_text = f"{name} {verb} {place}."
        corpus.append(make_example(doc_text, summary_text, doc_id=f"trip-{i:02d}"))
    return corpus

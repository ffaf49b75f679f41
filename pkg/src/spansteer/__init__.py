"""Controllable summarization toolkit built on QA-labeled salient spans.

Pipeline: label salient document spans against gold summaries (QA-based,
lexical, or greedy-sentence oracles), train a span classifier and a
marked-span conditional generator, augment training data for tighter
content control, and evaluate with ROUGE and question-based metrics.
"""

from .annotation import FixtureProvider, SyntacticProvider, annotate, fixture_provider
from .classifier import (
    ClassifierConfig,
    ClassifierHead,
    HashedFrozenEncoder,
    SpanScore,
    TinyTrainableEncoder,
    TokenEncoder,
    balanced_bce_loss,
    precision_recall_at_k,
    predict_top_k,
    span_representation,
    train_classifier,
)
from .corpus import (
    AnnotatedExample,
    Document,
    GoldSummary,
    Phrase,
    SpanLabel,
    TokenSpan,
    load_corpus,
    save_corpus,
    validate_example,
)
from .generation import (
    DecodeConfig,
    EchoAdapter,
    GeneratorConfig,
    Seq2SeqAdapter,
    TinySeq2SeqAdapter,
    summarize,
    train_generator,
)
from .marking import MarkedSequence, mark_spans, resolve_overlaps, strip_markers
from .oracles import (
    greedy_rouge2_sentences,
    label_corpus,
    label_example,
    lexical_first_occurrence,
    qa_salience,
)
from .qa import (
    QAPrediction,
    QuestionAnswerer,
    QuestionGenerator,
    answer_is_correct,
    lexical_stub_answerer,
    template_stub_generator,
)
from .rouge import RougeScore, rouge_1, rouge_2, rouge_l, rouge_n

__version__ = "0.1.0"

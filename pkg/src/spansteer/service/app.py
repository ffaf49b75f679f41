"""HTTP control service: analyze a document's candidate spans, then steer
summary generation by choosing which spans to mark.

Question generation for the selected spans happens at /generate time, not
/analyze, keeping analysis latency down to encoding plus a linear head.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from ..annotation import AnnotationError, SyntacticProvider, annotate
from ..classifier import ClassifierHead, TokenEncoder, score_spans
from ..corpus import Document, detokenize, span_surface
from ..evaluation import question_for_span
from ..generation import DecodeConfig, GenerationCheckpoint, GenerationError, summarize
from ..manifest import file_sha256
from ..qa import QuestionAnswerer, QuestionGenerator, answer_is_correct
from ..marking import resolve_overlaps
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    QuestionDiagnostic,
    SpanPayload,
)
from .state import Session, SessionStore, session_id_for

logger = logging.getLogger(__name__)


@dataclass
class ServiceComponents:
    provider: SyntacticProvider
    encoder: TokenEncoder
    head: ClassifierHead
    generator: GenerationCheckpoint | None
    qg: QuestionGenerator
    qa: QuestionAnswerer
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    span_type: str = "np"
    max_chars: int = 20000
    session_ttl: float = 1800.0
    max_inflight_generations: int = 2
    versions: dict[str, str] = field(default_factory=dict)


def components_from_config(config) -> ServiceComponents:
    """Build service components from a RunConfig; checkpoints are loaded
    when their directories are configured and present."""
    from ..classifier import load_classifier
    from ..generation import load_generator

    versions: dict[str, str] = {}
    encoder = config.build_encoder()
    head = ClassifierHead.init(encoder.dim, seed=config.seed)
    span_type = "np"
    if config.classifier_dir and Path(config.classifier_dir).exists():
        model = load_classifier(config.classifier_dir)
        encoder, head, span_type = model.encoder, model.head, model.span_type
        versions["classifier"] = file_sha256(Path(config.classifier_dir) / "config.json")
    else:
        versions["classifier"] = f"seeded-stub-head(seed={config.seed})"
    generator = None
    if config.generator_dir:
        gen_dir = Path(config.generator_dir)
        if gen_dir.exists():
            generator = load_generator(gen_dir)
            versions["generator"] = file_sha256(gen_dir / "config.json")
        else:
            versions["generator"] = "missing"
    else:
        from ..generation import EchoAdapter

        generator = GenerationCheckpoint(adapter=EchoAdapter())
        versions["generator"] = "echo-stub"
    return ServiceComponents(
        provider=config.build_provider(), encoder=encoder, head=head,
        generator=generator, qg=config.build_qg(), qa=config.build_qa(),
        decode=config.decode_config(), span_type=span_type,
        max_chars=config.service_max_chars,
        session_ttl=config.session_ttl_seconds, versions=versions)


def create_app(components: ServiceComponents) -> FastAPI:
    app = FastAPI(title="spansteer control service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore(ttl_seconds=components.session_ttl)
    generation_slots = threading.BoundedSemaphore(
        max(1, components.max_inflight_generations))
    app.state.components = components
    app.state.sessions = store

    def candidate_phrase_spans(doc: Document):
        phrase_type = "np" if components.span_type in ("np", "qa") else components.span_type
        if components.span_type == "sentence":
            return list(doc.sentences)
        return [p.span for p in doc.phrases_of_type(phrase_type)]

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(request: AnalyzeRequest) -> AnalyzeResponse:
        text = request.text
        if not text.strip():
            raise HTTPException(status_code=400, detail="text is empty")
        if len(text) > components.max_chars:
            raise HTTPException(
                status_code=413,
                detail=f"text exceeds {components.max_chars} characters")
        session_id = session_id_for(text)
        try:
            doc = annotate(text, components.provider, doc_id=session_id)
            ranked = score_spans(doc, candidate_phrase_spans(doc),
                                 components.encoder, components.head)
        except AnnotationError as exc:
            raise HTTPException(status_code=503,
                                detail=f"annotation provider failed: {exc}")
        store.put(Session(session_id=session_id, document=doc, spans=ranked))
        return AnalyzeResponse(
            session_id=session_id,
            tokens=list(doc.tokens),
            sentences=[[s.start, s.end] for s in doc.sentences],
            spans=[SpanPayload(id=i, start=s.span.start, end=s.span.end,
                               score=s.score, probability=s.probability,
                               text=span_surface(doc.tokens, s.span))
                   for i, s in enumerate(ranked)],
        )

    @app.post("/generate", response_model=GenerateResponse,
              response_model_exclude_none=True)
    def generate(request: GenerateRequest) -> GenerateResponse:
        session = store.get(request.session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {request.session_id!r}")
        if components.generator is None:
            raise HTTPException(status_code=503,
                                detail="generation backend unavailable")
        doc = session.document
        invalid = [i for i in request.span_ids
                   if not 0 <= i < len(session.spans)]
        if invalid:
            raise HTTPException(status_code=422,
                                detail=f"invalid span ids: {invalid}")
        selected_ids = sorted(set(request.span_ids))
        scored = [(session.spans[i].span, session.spans[i].score)
                  for i in selected_ids]
        kept_spans = resolve_overlaps(scored)
        kept_ids = [i for i in selected_ids
                    if session.spans[i].span in set(kept_spans)]
        dropped_ids = [i for i in selected_ids if i not in kept_ids]
        try:
            with generation_slots:  # cap in-flight work on the backend
                result = summarize(doc, kept_spans, components.generator,
                                   components.decode)
        except GenerationError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        summary_text = detokenize(result.summary_tokens)
        diagnostics = []
        answered = 0
        for span_id in kept_ids:
            span = session.spans[span_id].span
            question = question_for_span(None, doc, span, components.qg)
            prediction = components.qa.answer(question, summary_text)
            ok = (prediction.is_answerable
                  and answer_is_correct(prediction.answer_text,
                                        span_surface(doc.tokens, span)))
            answered += ok
            diagnostics.append(QuestionDiagnostic(
                span_id=span_id, question=question, answered=ok,
                answer=prediction.answer_text))
        recall = answered / len(kept_ids) if kept_ids else None
        ratio = (len(kept_ids) / len(result.summary_tokens)
                 if kept_ids and result.summary_tokens else None)
        return GenerateResponse(
            summary=summary_text,
            summary_tokens=list(result.summary_tokens),
            question_recall=recall,
            per_question=diagnostics,
            k_length_ratio=ratio,
            dropped_span_ids=dropped_ids,
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        degraded = components.generator is None
        return HealthResponse(
            status="degraded" if degraded else "ok",
            adapters={
                "provider": type(components.provider).__name__,
                "encoder": type(components.encoder).__name__,
                "qg": type(components.qg).__name__,
                "qa": type(components.qa).__name__,
                **components.versions,
            },
        )

    return app

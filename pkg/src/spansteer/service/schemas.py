"""Pydantic request/response models for the control service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class AnalyzeRequest(BaseModel):
    text: str


class SpanPayload(BaseModel):
    id: int
    start: int
    end: int
    score: float
    probability: float
    text: str


class AnalyzeResponse(BaseModel):
    session_id: str
    tokens: list[str]
    sentences: list[list[int]]
    spans: list[SpanPayload]


class GenerateRequest(BaseModel):
    session_id: str
    span_ids: list[int] = Field(default_factory=list)


class QuestionDiagnostic(BaseModel):
    span_id: int
    question: str
    answered: bool
    answer: str


class GenerateResponse(BaseModel):
    summary: str
    summary_tokens: list[str]
    question_recall: float | None = None
    per_question: list[QuestionDiagnostic] = Field(default_factory=list)
    k_length_ratio: float | None = None
    dropped_span_ids: list[int] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    adapters: dict[str, str]

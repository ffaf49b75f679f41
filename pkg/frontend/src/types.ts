/** Service payload types, mirroring the control service's JSON schemas. */

export interface SpanPayload {
  id: number;
  start: number;
  end: number;
  score: number;
  probability: number;
  text: string;
}

export interface AnalyzeResponse {
  session_id: string;
  tokens: string[];
  sentences: [number, number][];
  spans: SpanPayload[];
}

export interface QuestionDiagnostic {
  span_id: number;
  question: string;
  answered: boolean;
  answer: string;
}

export interface GenerateResponse {
  summary: string;
  summary_tokens: string[];
  question_recall?: number;
  per_question: QuestionDiagnostic[];
  k_length_ratio?: number;
  dropped_span_ids: number[];
}

export interface HealthResponse {
  status: string;
  adapters: Record<string, string>;
}

/** Thin typed client for the control service. */

import type { AnalyzeResponse, GenerateResponse, HealthResponse } from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, public detail: string) {
    super(`service error ${status}: ${detail}`);
  }
}

async function post<T>(url: string, body: unknown): Promise<T> {
  const response = await fetch(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const parsed = await response.json();
      if (parsed && typeof parsed.detail === "string") detail = parsed.detail;
    } catch {
      // keep the status text
    }
    throw new ServiceError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class WorkbenchApi {
  constructor(private baseUrl: string = "") {}

  analyze(text: string): Promise<AnalyzeResponse> {
    return post<AnalyzeResponse>(`${this.baseUrl}/analyze`, { text });
  }

  generate(sessionId: string, spanIds: number[]): Promise<GenerateResponse> {
    return post<GenerateResponse>(`${this.baseUrl}/generate`, {
      session_id: sessionId,
      span_ids: spanIds,
    });
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(`${this.baseUrl}/health`);
    if (!response.ok) throw new ServiceError(response.status, response.statusText);
    return (await response.json()) as HealthResponse;
  }
}

/**
 * Workbench state and its pure transitions. All metric numbers shown in the
 * UI come from service payloads; nothing is recomputed here.
 */

import type { AnalyzeResponse, GenerateResponse } from "./types.js";

export const MAX_ROUNDS = 5;

export interface Round {
  selected: number[];
  response: GenerateResponse;
}

export interface Banner {
  status: number;
  message: string;
  retryable: boolean;
}

export interface WorkbenchState {
  text: string;
  analysis: AnalyzeResponse | null;
  selected: Set<number>;
  sliderK: number;
  rounds: Round[]; // newest first, capped at MAX_ROUNDS
  generating: boolean;
  banner: Banner | null;
}

export function initialState(): WorkbenchState {
  return {
    text: "",
    analysis: null,
    selected: new Set(),
    sliderK: 3,
    rounds: [],
    generating: false,
    banner: null,
  };
}

export function withAnalysis(
  state: WorkbenchState,
  text: string,
  analysis: AnalyzeResponse,
  preselect: number[] | null = null,
): WorkbenchState {
  const valid = new Set(analysis.spans.map((s) => s.id));
  const selected =
    preselect === null
      ? topKIds(analysis, state.sliderK)
      : new Set(preselect.filter((id) => valid.has(id)));
  return { ...state, text, analysis, selected, rounds: [], banner: null };
}

export function toggleSpan(state: WorkbenchState, id: number): WorkbenchState {
  const selected = new Set(state.selected);
  if (selected.has(id)) {
    selected.delete(id);
  } else {
    selected.add(id);
  }
  return { ...state, selected };
}

/** The k highest-scored spans; the analyze payload is already ranked. */
export function topKIds(analysis: AnalyzeResponse, k: number): Set<number> {
  return new Set(analysis.spans.slice(0, k).map((s) => s.id));
}

export function applySlider(state: WorkbenchState, k: number): WorkbenchState {
  if (!state.analysis) return { ...state, sliderK: k };
  return { ...state, sliderK: k, selected: topKIds(state.analysis, k) };
}

export function beginGenerate(state: WorkbenchState): WorkbenchState {
  return { ...state, generating: true, banner: null };
}

export function completeGenerate(
  state: WorkbenchState,
  response: GenerateResponse,
): WorkbenchState {
  const round: Round = {
    selected: [...state.selected].sort((a, b) => a - b),
    response,
  };
  return {
    ...state,
    generating: false,
    rounds: [round, ...state.rounds].slice(0, MAX_ROUNDS),
  };
}

export function failRequest(
  state: WorkbenchState,
  status: number,
  message: string,
): WorkbenchState {
  return {
    ...state,
    generating: false,
    banner: { status, message, retryable: status >= 500 },
  };
}

export function dismissBanner(state: WorkbenchState): WorkbenchState {
  return { ...state, banner: null };
}

/** Span ids the server dropped in the latest round (overlap conflicts). */
export function latestDroppedIds(state: WorkbenchState): Set<number> {
  const latest = state.rounds[0];
  return new Set(latest ? latest.response.dropped_span_ids : []);
}

export function recallBadge(recall: number | undefined): string {
  if (recall === undefined || recall === null) return "–";
  return `${Math.round(recall * 100)}%`;
}

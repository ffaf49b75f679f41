/**
 * DOM rendering. The whole app re-renders from state on every change; the
 * document is small enough that diffing would be overkill.
 */

import {
  latestDroppedIds,
  recallBadge,
  type Round,
  type WorkbenchState,
} from "./state.js";
import type { SpanPayload } from "./types.js";

export interface Handlers {
  onAnalyze(text: string): void;
  onToggle(id: number): void;
  onSlider(k: number): void;
  onGenerate(): void;
  onDismissBanner(): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBanner(state: WorkbenchState, handlers: Handlers): HTMLElement | null {
  if (!state.banner) return null;
  const banner = el("div", "banner");
  banner.setAttribute("data-testid", "banner");
  banner.append(
    el("span", "banner-status", `HTTP ${state.banner.status}`),
    el("span", "banner-message", ` ${state.banner.message} `),
  );
  if (state.banner.retryable) {
    const retry = el("button", "banner-retry", "Retry");
    retry.addEventListener("click", handlers.onRetry);
    banner.append(retry);
  }
  const dismiss = el("button", "banner-dismiss", "Dismiss");
  dismiss.addEventListener("click", handlers.onDismissBanner);
  banner.append(dismiss);
  return banner;
}

function renderInput(state: WorkbenchState, handlers: Handlers): HTMLElement {
  const section = el("section", "input-panel");
  const textarea = el("textarea");
  textarea.id = "doc-input";
  textarea.placeholder = "Paste a document...";
  textarea.value = state.text;
  const analyze = el("button", "", "Analyze");
  analyze.id = "analyze-btn";
  analyze.addEventListener("click", () => handlers.onAnalyze(textarea.value));
  section.append(textarea, analyze);
  return section;
}

function tokenSelected(index: number, state: WorkbenchState): boolean {
  if (!state.analysis) return false;
  for (const span of state.analysis.spans) {
    if (state.selected.has(span.id) && span.start <= index && index <= span.end) {
      return true;
    }
  }
  return false;
}

/** Highest-ranked candidate span covering a token, if any. */
function spanAtToken(index: number, spans: SpanPayload[]): SpanPayload | null {
  for (const span of spans) {
    if (span.start <= index && index <= span.end) return span;
  }
  return null;
}

function renderDocument(state: WorkbenchState, handlers: Handlers): HTMLElement {
  const section = el("section", "document-panel");
  if (!state.analysis) return section;
  const stream = el("div", "token-stream");
  stream.setAttribute("data-testid", "tokens");
  state.analysis.tokens.forEach((token, i) => {
    const node = el("span", "token", token);
    if (tokenSelected(i, state)) node.classList.add("hl");
    const covering = spanAtToken(i, state.analysis!.spans);
    if (covering) {
      node.classList.add("clickable");
      node.addEventListener("click", () => handlers.onToggle(covering.id));
    }
    stream.append(node, document.createTextNode(" "));
  });
  section.append(stream);
  return section;
}

function renderControls(state: WorkbenchState, handlers: Handlers): HTMLElement {
  const section = el("section", "controls");
  if (!state.analysis) return section;

  const sliderLabel = el("label", "", `top-k preselect: ${state.sliderK}`);
  const slider = el("input");
  slider.type = "range";
  slider.id = "k-slider";
  slider.min = "0";
  slider.max = String(state.analysis.spans.length);
  slider.value = String(state.sliderK);
  slider.addEventListener("input", () =>
    handlers.onSlider(parseInt(slider.value, 10)),
  );
  sliderLabel.append(slider);

  const chips = el("div", "chips");
  chips.setAttribute("data-testid", "chips");
  const dropped = latestDroppedIds(state);
  const answeredIds = new Set(
    (state.rounds[0]?.response.per_question ?? [])
      .filter((q) => q.answered)
      .map((q) => q.span_id),
  );
  for (const span of state.analysis.spans) {
    const chip = el("button", "chip", `${span.text} (${span.score.toFixed(2)})`);
    chip.setAttribute("data-span-id", String(span.id));
    if (state.selected.has(span.id)) chip.classList.add("selected");
    if (answeredIds.has(span.id)) chip.classList.add("answered");
    if (dropped.has(span.id)) {
      chip.classList.add("conflict");
      chip.append(el("span", "conflict-icon", " ⚠"));
      chip.title = "dropped: overlaps a higher-scored selected span";
    }
    chip.addEventListener("click", () => handlers.onToggle(span.id));
    chips.append(chip);
  }

  const generate = el("button", "generate", "Generate summary");
  generate.id = "generate-btn";
  generate.disabled = state.generating; // one in-flight request at a time
  if (state.generating) generate.textContent = "Generating...";
  generate.addEventListener("click", handlers.onGenerate);

  section.append(sliderLabel, chips, generate);
  return section;
}

function renderRound(round: Round, index: number): HTMLElement {
  const card = el("article", "round");
  card.setAttribute("data-testid", `round-${index}`);
  const heading = index === 0 ? "Latest round" : `Round -${index}`;
  card.append(el("h3", "", heading));
  card.append(el("p", "summary-text", round.response.summary));

  const stats = el("div", "stats");
  const badge = el("span", "recall-badge",
                   recallBadge(round.response.question_recall));
  badge.setAttribute("data-testid", "recall-badge");
  stats.append(el("span", "", "question recall: "), badge);
  if (round.response.k_length_ratio !== undefined
      && round.response.k_length_ratio !== null) {
    stats.append(el("span", "ratio",
                    ` k/length: ${round.response.k_length_ratio.toFixed(3)}`));
  }
  card.append(stats);

  const list = el("ul", "questions");
  for (const q of round.response.per_question) {
    const item = el("li", q.answered ? "answered" : "unanswered");
    item.textContent = `${q.answered ? "✓" : "✗"} ${q.question}`
      + (q.answered ? ` → ${q.answer}` : "");
    list.append(item);
  }
  card.append(list);
  if (round.response.dropped_span_ids.length > 0) {
    card.append(el("p", "dropped-note",
                   `dropped overlapping span ids: ${round.response.dropped_span_ids.join(", ")}`));
  }
  return card;
}

function renderRounds(state: WorkbenchState): HTMLElement {
  const section = el("section", "rounds");
  section.setAttribute("data-testid", "rounds");
  state.rounds.forEach((round, i) => section.append(renderRound(round, i)));
  return section;
}

export function render(root: HTMLElement, state: WorkbenchState,
                       handlers: Handlers): void {
  root.textContent = "";
  const banner = renderBanner(state, handlers);
  if (banner) root.append(banner);
  root.append(
    renderInput(state, handlers),
    renderDocument(state, handlers),
    renderControls(state, handlers),
    renderRounds(state),
  );
}

/** Controller: wires state transitions, the service client, and the URL
 * fragment together. `createWorkbench` is also the test entry point. */

import { ServiceError, WorkbenchApi } from "./api.js";
import { decodeFragment, encodeFragment } from "./fragment.js";
import {
  applySlider,
  beginGenerate,
  completeGenerate,
  dismissBanner,
  failRequest,
  initialState,
  toggleSpan,
  withAnalysis,
  type WorkbenchState,
} from "./state.js";
import { render, type Handlers } from "./view.js";

export interface FragmentSink {
  read(): string;
  write(fragment: string): void;
}

export function windowFragmentSink(win: Window): FragmentSink {
  return {
    read: () => win.location.hash,
    write: (fragment) => {
      win.history.replaceState(null, "", "#" + fragment);
    },
  };
}

export class Workbench {
  state: WorkbenchState = initialState();

  constructor(
    private root: HTMLElement,
    private api: WorkbenchApi,
    private fragmentSink: FragmentSink,
  ) {}

  /** Restore from the URL fragment (if present), then render. */
  async start(): Promise<void> {
    const restored = decodeFragment(this.fragmentSink.read());
    if (restored && restored.text.trim()) {
      await this.analyze(restored.text, restored.selected);
    } else {
      this.update(this.state);
    }
  }

  private update(next: WorkbenchState): void {
    this.state = next;
    if (next.analysis) {
      this.fragmentSink.write(encodeFragment({
        text: next.text,
        selected: [...next.selected],
      }));
    }
    render(this.root, next, this.handlers());
  }

  private handlers(): Handlers {
    return {
      onAnalyze: (text) => void this.analyze(text, null),
      onToggle: (id) => this.update(toggleSpan(this.state, id)),
      onSlider: (k) => this.update(applySlider(this.state, k)),
      onGenerate: () => void this.generate(),
      onDismissBanner: () => this.update(dismissBanner(this.state)),
      onRetry: () => void this.generate(),
    };
  }

  async analyze(text: string, preselect: number[] | null): Promise<void> {
    if (!text.trim()) return;
    try {
      const analysis = await this.api.analyze(text);
      this.update(withAnalysis(this.state, text, analysis, preselect));
    } catch (error) {
      this.update(this.toBanner(error));
    }
  }

  async generate(): Promise<void> {
    const analysis = this.state.analysis;
    if (!analysis || this.state.generating) return;
    this.update(beginGenerate(this.state));
    try {
      const response = await this.api.generate(
        analysis.session_id,
        [...this.state.selected].sort((a, b) => a - b),
      );
      this.update(completeGenerate(this.state, response));
    } catch (error) {
      this.update(this.toBanner(error));
    }
  }

  private toBanner(error: unknown): WorkbenchState {
    if (error instanceof ServiceError) {
      return failRequest(this.state, error.status, error.detail);
    }
    return failRequest(this.state, 0, String(error));
  }
}

export function createWorkbench(
  root: HTMLElement,
  api: WorkbenchApi,
  fragmentSink: FragmentSink,
): Workbench {
  return new Workbench(root, api, fragmentSink);
}

/** Browser entry point (index.html). */
export function bootWorkbench(serviceUrl = ""): Workbench {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const workbench = createWorkbench(
    root,
    new WorkbenchApi(serviceUrl),
    windowFragmentSink(window),
  );
  void workbench.start();
  return workbench;
}

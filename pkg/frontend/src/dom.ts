import { drawHeatmap } from "./heatmap.js";
import { OverlayController } from "./overlay.js";
import { ClientSessionState, SessionView } from "./session.js";
import { NextPayload, ResultPayload, TeachingFeedback } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

/** Browser rendering; the flow decides what to show and when. */
export class DomView implements SessionView {
  private answerResolver: ((choice: number) => void) | null = null;
  private proceedPromise: Promise<void> = Promise.resolve();

  constructor(private readonly root: HTMLElement, private readonly assetsBase = "") {}

  /** Used by the entry point: resolves when the learner presses an answer button. */
  awaitAnswer(): Promise<number> {
    return new Promise((resolve) => {
      this.answerResolver = resolve;
    });
  }

  awaitProceed(): Promise<void> {
    return this.proceedPromise;
  }

  private clear(): void {
    this.root.replaceChildren();
  }

  private buttons(state: ClientSessionState, enabled: boolean): HTMLElement {
    const bar = el("div", "buttons");
    for (const option of state.buttonOrder) {
      const button = el("button", "answer", option.label);
      button.disabled = !enabled;
      button.addEventListener("click", () => {
        const resolve = this.answerResolver;
        this.answerResolver = null;
        resolve?.(option.value);
      });
      bar.appendChild(button);
    }
    return bar;
  }

  private image(uri: string | null, className = "image"): HTMLElement {
    if (!uri) {
      return el("div", `${className} placeholder`, "(no image)");
    }
    const img = el("img", className);
    img.src = this.assetsBase + uri;
    return img;
  }

  renderPrompt(payload: NextPayload, state: ClientSessionState): void {
    this.clear();
    if (payload.phase === "done") {
      return;
    }
    if (payload.phase === "tutorial") {
      this.root.appendChild(el("h2", "title", payload.tutorial.title));
      this.root.appendChild(el("p", "tutorial", payload.tutorial.body));
      this.root.appendChild(el("p", "hint", "Press any category button to begin."));
    } else {
      const label = payload.phase === "teaching" ? "Study" : "Test";
      this.root.appendChild(
        el("h2", "title", `${label} ${payload.index + 1} of ${payload.total}`)
      );
      this.root.appendChild(this.image(payload.image_uri));
      this.root.appendChild(el("p", "hint", "Which category is this?"));
    }
    this.root.appendChild(this.buttons(state, true));
  }

  renderFeedback(
    feedback: TeachingFeedback,
    overlay: OverlayController | null,
    gridBroken: boolean,
    _state: ClientSessionState
  ): void {
    this.clear();
    this.root.appendChild(el("h2", "title", feedback.correct ? "Correct" : "Not quite"));
    this.root.appendChild(el("p", "label", `This is: ${feedback.correct_class_name}`));
    const stage = el("div", "stage");
    stage.appendChild(this.image(feedback.image_uri));
    if (gridBroken) {
      this.root.appendChild(
        el("p", "warning", "Explanation unavailable for this image.")
      );
    } else if (feedback.show_explanation && feedback.explanation && overlay) {
      const canvas = el("canvas", "heatmap");
      canvas.width = 256;
      canvas.height = 256;
      canvas.style.display = "none";
      drawHeatmap(canvas, feedback.explanation);
      stage.appendChild(canvas);
      overlay.addToggleListener((show) => {
        canvas.style.display = show ? "block" : "none";
      });
    }
    this.root.appendChild(stage);
    const proceed = el("button", "proceed", "Continue");
    proceed.disabled = true;
    this.root.appendChild(proceed);
    this.proceedPromise = new Promise((resolve) => {
      proceed.addEventListener("click", () => resolve(), { once: true });
    });
    if (overlay) {
      overlay.addUnlockListener(() => {
        proceed.disabled = false;
      });
    } else {
      proceed.disabled = false;
    }
  }

  renderTestAcknowledged(_state: ClientSessionState): void {
    this.clear();
    this.root.appendChild(el("p", "ack", "Answer recorded."));
  }

  renderResult(result: ResultPayload, _state: ClientSessionState): void {
    this.clear();
    this.root.appendChild(el("h2", "title", "Session complete"));
    this.root.appendChild(
      el("p", "score", `Test accuracy: ${(result.accuracy * 100).toFixed(0)}%`)
    );
  }
}

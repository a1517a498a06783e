import { ApiClient } from "./api.js";
import { isValidGrid } from "./heatmap.js";
import { OverlayController } from "./overlay.js";
import {
  ButtonOption,
  NextPayload,
  Phase,
  ResultPayload,
  TeachingFeedback,
} from "./types.js";

export interface ClientSessionState {
  sessionId: string | null;
  phase: Phase | null;
  current: NextPayload | null;
  buttonOrder: ButtonOption[];
  proceedLocked: boolean;
}

/**
 * Rendering surface the flow drives. The browser implementation paints DOM;
 * tests substitute a recorder. Rendering is a pure function of the served
 * payloads: the client never infers labels on its own.
 */
export interface SessionView {
  renderPrompt(payload: NextPayload, state: ClientSessionState): void;
  /** Teaching feedback card; `overlay` is already started. `gridBroken` marks
   *  a malformed explanation payload downgraded to label-only with a warning. */
  renderFeedback(
    feedback: TeachingFeedback,
    overlay: OverlayController | null,
    gridBroken: boolean,
    state: ClientSessionState
  ): void;
  /** Testing acknowledgment: no correctness information exists to show. */
  renderTestAcknowledged(state: ClientSessionState): void;
  renderResult(result: ResultPayload, state: ClientSessionState): void;
  /** When present, resolves once the learner presses the proceed control
   *  (which only enables after the overlay unlocks). */
  awaitProceed?(): Promise<void>;
}

export type AnswerFn = (payload: NextPayload) => number | Promise<number>;

export class SessionFlow {
  readonly state: ClientSessionState = {
    sessionId: null,
    phase: null,
    current: null,
    buttonOrder: [],
    proceedLocked: false,
  };

  constructor(
    private readonly api: ApiClient,
    private readonly view: SessionView
  ) {}

  /** Create a fresh session, or resume an existing one by id. */
  async start(strategy: string, existingSessionId?: string): Promise<void> {
    if (existingSessionId) {
      this.state.sessionId = existingSessionId;
      return;
    }
    const created = await this.api.createSession(strategy);
    this.state.sessionId = created.session_id;
    this.state.phase = created.phase;
    this.state.buttonOrder = created.options;
  }

  /**
   * Drive the whole session: tutorial, teaching rounds with timed feedback,
   * testing rounds with bare acknowledgments, then the result screen.
   * Resumable at any point because fetching the next item is idempotent.
   */
  async run(chooseAnswer: AnswerFn): Promise<ResultPayload> {
    const sessionId = this.state.sessionId;
    if (!sessionId) {
      throw new Error("start() must be called first");
    }
    for (;;) {
      const payload = await this.api.next(sessionId);
      this.state.phase = payload.phase;
      this.state.current = payload;
      if (payload.phase === "done") {
        break;
      }
      this.state.buttonOrder = payload.options;
      this.view.renderPrompt(payload, this.state);
      const choice = await chooseAnswer(payload);
      const reply = await this.api.respond(sessionId, payload.index, choice);
      if (payload.phase === "teaching" && "correct_class" in reply) {
        await this.presentFeedback(reply);
      } else if (payload.phase === "testing") {
        this.view.renderTestAcknowledged(this.state);
      }
    }
    const result = await this.api.result(sessionId);
    this.state.phase = "done";
    this.view.renderResult(result, this.state);
    return result;
  }

  private async presentFeedback(feedback: TeachingFeedback): Promise<void> {
    let gridBroken = false;
    let hasExplanation = false;
    if (feedback.show_explanation) {
      if (isValidGrid(feedback.explanation)) {
        hasExplanation = true;
      } else {
        gridBroken = true; // downgrade to label-only feedback with a warning
      }
    }
    const overlay = new OverlayController({
      alternateMs: feedback.alternate_ms,
      minWaitMs: feedback.min_wait_ms,
      hasExplanation,
    });
    this.state.proceedLocked = true;
    this.view.renderFeedback(feedback, overlay, gridBroken, this.state);
    overlay.start();
    await overlay.waitUnlocked();
    this.state.proceedLocked = false;
    if (this.view.awaitProceed) {
      await this.view.awaitProceed();
    }
    overlay.stop();
  }
}

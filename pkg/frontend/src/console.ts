/** Console state machine, kept free of DOM so it can be tested headlessly.
 *
 * The controller is a strict thin client: every trace in the history is the
 * parsed service response, appended untouched. The only local state is the
 * editable knowledge text, the confidence slider, and bookkeeping flags.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Episode, PipelineConfig, PipelineTrace } from "./types.js";

export interface ConsoleError {
  message: string;
  step?: string;
  retryable: boolean;
}

export interface ConsoleState {
  sessionId: string | null;
  episode: Episode | null;
  predictedKnowledge: string;
  knowledgeText: string;
  confidence: number;
  history: PipelineTrace[];
  pending: boolean;
  error: ConsoleError | null;
}

export const CONFIDENCE_MIN = 0;
export const CONFIDENCE_MAX = 10;

export type Listener = (state: ConsoleState) => void;

export class ConsoleController {
  readonly state: ConsoleState = {
    sessionId: null,
    episode: null,
    predictedKnowledge: "",
    knowledgeText: "",
    confidence: CONFIDENCE_MAX,
    history: [],
    pending: false,
    error: null,
  };

  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly config: PipelineConfig,
    private readonly seed = 0,
  ) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  /** True when the operator edited the knowledge away from the prediction. */
  get knowledgeEdited(): boolean {
    return this.state.knowledgeText !== this.state.predictedKnowledge;
  }

  setKnowledge(text: string): void {
    this.state.knowledgeText = text;
    this.notify();
  }

  setConfidence(value: number): void {
    const clamped = Math.min(CONFIDENCE_MAX, Math.max(CONFIDENCE_MIN, Math.round(value)));
    this.state.confidence = clamped;
    this.notify();
  }

  /** Parse pasted/loaded episode JSON, create a session, prefill the knowledge. */
  async loadEpisode(jsonText: string): Promise<boolean> {
    let episode: Episode;
    try {
      episode = JSON.parse(jsonText) as Episode;
      if (!episode || typeof episode !== "object" || !Array.isArray(episode.turns)) {
        throw new Error("episode JSON needs a turns array");
      }
    } catch (err) {
      this.state.error = { message: `could not parse episode: ${String(err)}`, retryable: false };
      this.notify();
      return false;
    }
    this.state.error = null;
    this.state.pending = true;
    this.notify();
    try {
      const created = await this.api.createSession(episode, this.config, this.seed);
      const knowledge = await this.api.knowledge(created.session_id);
      this.state.sessionId = created.session_id;
      this.state.episode = episode;
      this.state.predictedKnowledge = knowledge.predicted_knowledge;
      this.state.knowledgeText = knowledge.predicted_knowledge;
      this.state.history = [];
      return true;
    } catch (err) {
      this.state.error = this.describeError(err);
      return false;
    } finally {
      this.state.pending = false;
      this.notify();
    }
  }

  /** Run one probe; resolves to the appended trace or null on error/guard. */
  async probe(): Promise<PipelineTrace | null> {
    if (this.state.pending || this.state.sessionId === null) {
      return null; // one in-flight probe per session
    }
    this.state.pending = true;
    this.state.error = null;
    this.notify();
    const body: { injected_knowledge?: string; confidence: number } = {
      confidence: this.state.confidence,
    };
    if (this.knowledgeEdited) {
      body.injected_knowledge = this.state.knowledgeText;
    }
    try {
      const trace = await this.api.respond(this.state.sessionId, body);
      this.state.history.push(trace);
      return trace;
    } catch (err) {
      this.state.error = this.describeError(err);
      return null;
    } finally {
      this.state.pending = false;
      this.notify();
    }
  }

  private describeError(err: unknown): ConsoleError {
    if (err instanceof ApiError) {
      const step = err.step;
      const retryable = err.status === 502;
      const suffix = step ? ` (${step} step)` : "";
      return { message: `service error ${err.status}${suffix}`, step, retryable };
    }
    return { message: String(err), retryable: false };
  }
}

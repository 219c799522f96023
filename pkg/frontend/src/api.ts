/** Thin client for the pipeline service API. All data flows through here;
 * the console never derives or recomputes anything the service returns. */

import type {
  Episode,
  KnowledgeReply,
  PipelineConfig,
  PipelineTrace,
  RespondBody,
  SessionInfo,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`service error ${status}`);
  }

  /** Step label ("knowledge" | "response") carried by 502 bodies, if any. */
  get step(): string | undefined {
    if (
      typeof this.detail === "object" &&
      this.detail !== null &&
      "step" in this.detail &&
      typeof (this.detail as { step: unknown }).step === "string"
    ) {
      return (this.detail as { step: string }).step;
    }
    return undefined;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const detail =
        typeof payload === "object" && payload !== null && "detail" in payload
          ? (payload as { detail: unknown }).detail
          : payload;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  createSession(episode: Episode, config: PipelineConfig, seed = 0): Promise<{ session_id: string }> {
    return this.request("POST", "/api/sessions", { episode, config, seed });
  }

  knowledge(sessionId: string): Promise<KnowledgeReply> {
    return this.request("POST", `/api/sessions/${sessionId}/knowledge`);
  }

  respond(sessionId: string, body: RespondBody): Promise<PipelineTrace> {
    return this.request("POST", `/api/sessions/${sessionId}/respond`, body);
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }
}

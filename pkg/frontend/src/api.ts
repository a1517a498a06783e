import {
  CreatedSession,
  NextPayload,
  RespondPayload,
  ResultPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    public readonly status: number,
    message: string
  ) {
    super(message);
  }
}

/** Thin typed client over the session endpoints; one in-flight request at a time. */
export class ApiClient {
  private busy = false;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async call<T>(path: string, init?: RequestInit): Promise<T> {
    if (this.busy) {
      throw new Error("a request is already in flight");
    }
    this.busy = true;
    try {
      const response = await this.fetchFn(this.baseUrl + path, init);
      const body = await response.json();
      if (!response.ok) {
        throw new ApiError(
          typeof body?.error === "string" ? body.error : "unknown",
          response.status,
          typeof body?.message === "string" ? body.message : "request failed"
        );
      }
      return body as T;
    } finally {
      this.busy = false;
    }
  }

  createSession(strategy: string): Promise<CreatedSession> {
    return this.call("/api/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ strategy }),
    });
  }

  next(sessionId: string): Promise<NextPayload> {
    return this.call(`/api/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  respond(sessionId: string, index: number, choice: number): Promise<RespondPayload> {
    return this.call(`/api/sessions/${encodeURIComponent(sessionId)}/respond`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ index, choice }),
    });
  }

  result(sessionId: string): Promise<ResultPayload> {
    return this.call(`/api/sessions/${encodeURIComponent(sessionId)}/result`);
  }
}

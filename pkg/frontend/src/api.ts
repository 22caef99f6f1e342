/**
 * Advisor service client. The console talks to the engine exclusively
 * through this interface; its only configuration is the base URL.
 */
import {
  AdvisorRequestError,
  RecommendationPayload,
  RoundSubmission,
  ServiceError,
  StatePayload,
  WhatIfPayload,
} from "./types.js";

export interface ApiClient {
  getState(sessionId: string): Promise<StatePayload>;
  submitRound(sessionId: string, body: RoundSubmission): Promise<StatePayload>;
  getRecommendation(sessionId: string): Promise<RecommendationPayload>;
  whatIf(
    sessionId: string,
    items: number[],
    samples?: number,
  ): Promise<WhatIfPayload>;
}

async function parseOrThrow(resp: Response): Promise<unknown> {
  const body = await resp.json();
  if (!resp.ok) {
    const err = ServiceError.safeParse(body);
    if (err.success) {
      throw new AdvisorRequestError(err.data.code, err.data.detail, resp.status);
    }
    throw new AdvisorRequestError("HTTP", `status ${resp.status}`, resp.status);
  }
  return body;
}

export class HttpApiClient implements ApiClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async getState(sessionId: string): Promise<StatePayload> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/state`));
    return StatePayload.parse(await parseOrThrow(resp));
  }

  async submitRound(sessionId: string, body: RoundSubmission): Promise<StatePayload> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/rounds`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return StatePayload.parse(await parseOrThrow(resp));
  }

  async getRecommendation(sessionId: string): Promise<RecommendationPayload> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/recommendation`));
    return RecommendationPayload.parse(await parseOrThrow(resp));
  }

  async whatIf(
    sessionId: string,
    items: number[],
    samples = 200,
  ): Promise<WhatIfPayload> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/what-if`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ items, samples }),
    });
    return WhatIfPayload.parse(await parseOrThrow(resp));
  }
}

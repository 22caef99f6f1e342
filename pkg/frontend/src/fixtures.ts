/**
 * Replay client over recorded service exchanges. Used by the contract
 * tests (and demo mode) so the console runs with no live engine.
 */
import {
  AdvisorRequestError,
  RecommendationPayload,
  RoundSubmission,
  StatePayload,
  WhatIfPayload,
} from "./types.js";
import type { ApiClient } from "./api.js";

export interface Exchange {
  kind: string;
  method: string;
  path: string;
  request: unknown;
  status: number;
  response: unknown;
}

export interface FixtureFile {
  base_url: string;
  exchanges: Exchange[];
}

function canonical(value: unknown): string {
  if (Array.isArray(value)) {
    return `[${value.map(canonical).join(",")}]`;
  }
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([k, v]) => `${JSON.stringify(k)}:${canonical(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

function deepEqual(a: unknown, b: unknown): boolean {
  return canonical(a) === canonical(b);
}

/**
 * Matches requests against the recorded exchanges: exact path + body.
 * Successful round submissions are consumed in order; rejected ones and
 * reads can be replayed any number of times.
 */
export class FixtureClient implements ApiClient {
  private exchanges: Exchange[];
  private consumed = new Set<Exchange>();

  constructor(fixture: FixtureFile) {
    this.exchanges = fixture.exchanges;
  }

  sessionIds(): string[] {
    const ids = new Set<string>();
    for (const ex of this.exchanges) {
      const m = ex.path.match(/\/sessions\/([^/]+)/);
      if (m) ids.add(m[1]);
      if (ex.kind.startsWith("create") && ex.status === 200) {
        ids.add((ex.response as { session_id: string }).session_id);
      }
    }
    return [...ids];
  }

  private find(method: string, path: string, body?: unknown): Exchange {
    for (const ex of this.exchanges) {
      if (ex.method !== method || ex.path !== path) continue;
      if (body !== undefined && !deepEqual(ex.request, body)) continue;
      if (ex.status === 200 && method === "POST" && this.consumed.has(ex)) continue;
      if (ex.status === 200 && method === "POST") this.consumed.add(ex);
      return ex;
    }
    throw new AdvisorRequestError(
      "FIXTURE_MISS",
      `no recorded exchange for ${method} ${path} ${JSON.stringify(body)}`,
      501,
    );
  }

  private unwrap(ex: Exchange): unknown {
    if (ex.status !== 200) {
      const err = ex.response as { code: string; detail: string };
      throw new AdvisorRequestError(err.code, err.detail, ex.status);
    }
    return ex.response;
  }

  async getState(sessionId: string): Promise<StatePayload> {
    // states also arrive as round-submission responses; serve the freshest
    // recorded state view for the session
    const path = `/sessions/${sessionId}/state`;
    const ex = this.exchanges.filter(
      (e) => e.method === "GET" && e.path === path,
    );
    if (ex.length === 0) throw new AdvisorRequestError("FIXTURE_MISS", path, 501);
    return StatePayload.parse(this.unwrap(ex[0]));
  }

  async submitRound(sessionId: string, body: RoundSubmission): Promise<StatePayload> {
    const ex = this.find("POST", `/sessions/${sessionId}/rounds`, body);
    return StatePayload.parse(this.unwrap(ex));
  }

  async getRecommendation(sessionId: string): Promise<RecommendationPayload> {
    const ex = this.find("GET", `/sessions/${sessionId}/recommendation`);
    return RecommendationPayload.parse(this.unwrap(ex));
  }

  async whatIf(
    sessionId: string,
    items: number[],
    samples = 200,
  ): Promise<WhatIfPayload> {
    const ex = this.find("POST", `/sessions/${sessionId}/what-if`, {
      items,
      samples,
    });
    return WhatIfPayload.parse(this.unwrap(ex));
  }
}

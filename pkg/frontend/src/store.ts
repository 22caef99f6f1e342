/**
 * Session view store: a render-only mirror of service responses.
 *
 * Every state it holds arrived verbatim from the advisor service; the
 * console performs no auction transitions of its own (the contract tests
 * enforce this by feeding tampered fixtures and expecting them rendered
 * as-is).
 */
import type {
  RecommendationPayload,
  StatePayload,
  WhatIfPayload,
} from "./types.js";

export interface WhatIfCard {
  id: number;
  round: number;
  payload: WhatIfPayload;
  stale: boolean;
}

export type RecommendationView =
  | { status: "idle" }
  | { status: "waiting"; detail: string }
  | { status: "ready"; payload: RecommendationPayload; stale: boolean };

export class SessionView {
  state: StatePayload | null = null;
  previous: StatePayload | null = null;
  timeline: StatePayload[] = [];
  recommendation: RecommendationView = { status: "idle" };
  whatIfCards: WhatIfCard[] = [];
  lastError: { code: string; detail: string } | null = null;
  submitting = false;
  polling = false;
  private nextCardId = 1;

  /** Install a state received from the service (never computed locally). */
  acceptState(payload: StatePayload): void {
    if (this.state && payload.round !== this.state.round) {
      this.previous = this.state;
    }
    if (!this.state || payload.round !== this.state.round) {
      this.timeline.push(payload);
    } else {
      this.timeline[this.timeline.length - 1] = payload;
    }
    const advanced = this.state !== null && payload.round > this.state.round;
    this.state = payload;
    this.lastError = null;
    if (advanced) {
      for (const card of this.whatIfCards) {
        if (card.round < payload.round) card.stale = true;
      }
      if (this.recommendation.status === "ready") {
        this.recommendation = { ...this.recommendation, stale: true };
      }
    }
  }

  acceptRecommendation(payload: RecommendationPayload): void {
    this.recommendation = { status: "ready", payload, stale: false };
  }

  acceptWhatIf(payload: WhatIfPayload): void {
    if (!this.state) throw new Error("no state yet");
    this.whatIfCards.push({
      id: this.nextCardId++,
      round: this.state.round,
      payload,
      stale: false,
    });
  }

  acceptError(code: string, detail: string): void {
    this.lastError = { code, detail };
  }

  /** Reorder a card (the operator can sort comparisons by hand). */
  moveCard(id: number, offset: number): void {
    const idx = this.whatIfCards.findIndex((c) => c.id === id);
    if (idx < 0) return;
    const target = idx + offset;
    if (target < 0 || target >= this.whatIfCards.length) return;
    const [card] = this.whatIfCards.splice(idx, 1);
    this.whatIfCards.splice(target, 0, card);
  }
}

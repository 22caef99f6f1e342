/**
 * Session controller: wires client calls into the view store.
 *
 * Round submission is optimistic-disable only (the form locks until the
 * service confirms or rejects); recommendation requests poll while the
 * prediction is still computing, and submission stays disabled while a
 * poll for the same session is in flight.
 */
import type { ApiClient } from "./api.js";
import { roundFormHints } from "./form.js";
import { SessionView } from "./store.js";
import { AdvisorRequestError, RoundSubmission } from "./types.js";

const POLL_INTERVAL_MS = 500;

export class SessionController {
  readonly view = new SessionView();

  constructor(
    private readonly client: ApiClient,
    readonly sessionId: string,
  ) {}

  async refreshState(): Promise<void> {
    this.view.acceptState(await this.client.getState(this.sessionId));
  }

  /** Advisory pre-checks; the submit button is blocked while any exist. */
  hints(bids: number[][], observedWinners: Record<string, number>) {
    if (!this.view.state) return [];
    return roundFormHints(this.view.state, bids, observedWinners);
  }

  canSubmit(): boolean {
    return !this.view.submitting && !this.view.polling;
  }

  async submitRound(
    bids: number[][],
    observedWinners: Record<string, number> = {},
  ): Promise<boolean> {
    if (!this.view.state) throw new Error("no state loaded");
    if (!this.canSubmit()) return false;
    const body: RoundSubmission = {
      round: this.view.state.round,
      bids,
      observed_winners: observedWinners,
    };
    this.view.submitting = true;
    try {
      const state = await this.client.submitRound(this.sessionId, body);
      this.view.acceptState(state);
      return true;
    } catch (err) {
      if (err instanceof AdvisorRequestError) {
        this.view.acceptError(err.code, err.detail);
        return false;
      }
      throw err;
    } finally {
      this.view.submitting = false;
    }
  }

  async requestRecommendation(maxPolls = 240): Promise<void> {
    this.view.polling = true;
    try {
      for (let attempt = 0; attempt < maxPolls; attempt++) {
        try {
          const rec = await this.client.getRecommendation(this.sessionId);
          this.view.acceptRecommendation(rec);
          return;
        } catch (err) {
          if (err instanceof AdvisorRequestError && err.code === "NOT_READY") {
            this.view.recommendation = {
              status: "waiting",
              detail: err.detail,
            };
            await new Promise((r) => setTimeout(r, POLL_INTERVAL_MS));
            continue;
          }
          if (err instanceof AdvisorRequestError) {
            this.view.acceptError(err.code, err.detail);
            return;
          }
          throw err;
        }
      }
    } finally {
      this.view.polling = false;
    }
  }

  async runWhatIf(items: number[], samples = 200): Promise<boolean> {
    try {
      const payload = await this.client.whatIf(this.sessionId, items, samples);
      this.view.acceptWhatIf(payload);
      return true;
    } catch (err) {
      if (err instanceof AdvisorRequestError) {
        this.view.acceptError(err.code, err.detail);
        return false;
      }
      throw err;
    }
  }
}

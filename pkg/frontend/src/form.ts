/**
 * Client-side round-entry hints. Purely advisory display validation: the
 * service remains the authority and re-checks everything on submission.
 */
import type { StatePayload } from "./types.js";

export interface FormHint {
  code: "BUDGET" | "ELIGIBILITY" | "ALREADY_WINNING" | "TIE_NEEDS_WINNER";
  bidder: number | null;
  message: string;
}

export function roundFormHints(
  state: StatePayload,
  bids: number[][],
  observedWinners: Record<string, number>,
): FormHint[] {
  const hints: FormHint[] = [];
  const eps = state.epsilon;
  bids.forEach((items, bidder) => {
    const won = state.winner
      .map((w, j) => (w === bidder ? j : -1))
      .filter((j) => j >= 0);
    const overlap = items.filter((j) => won.includes(j));
    if (overlap.length) {
      hints.push({
        code: "ALREADY_WINNING",
        bidder,
        message: `bidder ${bidder} already holds item(s) ${overlap.join(", ")}`,
      });
    }
    if (items.length + won.length > state.eligibility[bidder]) {
      hints.push({
        code: "ELIGIBILITY",
        bidder,
        message:
          `bidder ${bidder}: ${items.length} new + ${won.length} held exceeds ` +
          `eligibility ${state.eligibility[bidder]}`,
      });
    }
    const raiseCost = items.reduce((s, j) => s + state.ticks[j] * eps + eps, 0);
    if (items.length && raiseCost > state.remaining_budgets[bidder]) {
      hints.push({
        code: "BUDGET",
        bidder,
        message:
          `bidder ${bidder}: raise cost ${raiseCost.toFixed(2)} exceeds remaining ` +
          `budget ${state.remaining_budgets[bidder].toFixed(2)}`,
      });
    }
  });
  // ties (an item bid by several bidders) need the realized winner
  for (let j = 0; j < state.m_items; j++) {
    const bidders = bids
      .map((items, i) => (items.includes(j) ? i : -1))
      .filter((i) => i >= 0);
    if (bidders.length >= 2 && !(String(j) in observedWinners)) {
      hints.push({
        code: "TIE_NEEDS_WINNER",
        bidder: null,
        message: `item ${j} is tied between bidders ${bidders.join(", ")}; enter the observed winner`,
      });
    }
  }
  return hints;
}

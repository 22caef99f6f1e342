/**
 * Payload schemas of the advisor service, validated at the boundary.
 * The console never derives auction state itself; these are the only
 * shapes it renders.
 */
import { z } from "zod";

export const PredictionStatus = z.object({
  status: z.enum(["ready", "computing", "error"]),
  done: z.number().optional(),
  total: z.number().optional(),
  detail: z.string().optional(),
});

export const StatePayload = z.object({
  session_id: z.string(),
  round: z.number().int(),
  ticks: z.array(z.number().int()),
  prices: z.array(z.number()),
  winner: z.array(z.number().int()),
  eligibility: z.array(z.number().int()),
  terminal: z.boolean(),
  epsilon: z.number(),
  n_bidders: z.number().int(),
  m_items: z.number().int(),
  advised_bidder: z.number().int(),
  budgets: z.array(z.number()),
  remaining_budgets: z.array(z.number()),
  prediction: PredictionStatus,
  final_utilities: z.array(z.number()).optional(),
});
export type StatePayload = z.infer<typeof StatePayload>;

export const ActionRow = z.object({
  action: z.array(z.number().int()),
  n: z.number().int(),
  r_alpha: z.number(),
  mean: z.number().nullable(),
  a_alpha: z.number().nullable(),
  c_alpha: z.number().nullable(),
});
export type ActionRow = z.infer<typeof ActionRow>;

export const RecommendationPayload = z.object({
  status: z.string(),
  action: z.array(z.number().int()),
  root_table: z.array(ActionRow),
  iterations: z.number().int(),
  tree_size: z.number().int(),
  elapsed_s: z.number(),
  round: z.number().int(),
});
export type RecommendationPayload = z.infer<typeof RecommendationPayload>;

export const WhatIfPayload = z.object({
  bid: z.array(z.number().int()),
  samples: z.number().int(),
  utility_mean: z.number(),
  utility_min: z.number(),
  utility_max: z.number(),
  exposure_frequency: z.number(),
  closing_price_means: z.array(z.number()),
});
export type WhatIfPayload = z.infer<typeof WhatIfPayload>;

export const ServiceError = z.object({
  code: z.string(),
  detail: z.string(),
});
export type ServiceError = z.infer<typeof ServiceError>;

export interface RoundSubmission {
  round: number;
  bids: number[][];
  observed_winners: Record<string, number>;
}

/** Raised for structured service rejections (BUDGET, ELIGIBILITY, ...). */
export class AdvisorRequestError extends Error {
  constructor(
    public readonly code: string,
    public readonly detail: string,
    public readonly status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

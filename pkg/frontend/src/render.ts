/**
 * HTML renderers for the console. Pure functions from service payloads to
 * markup strings, so the contract tests can assert on them without a DOM.
 */
import type { StatePayload } from "./types.js";
import type { RecommendationView, WhatIfCard } from "./store.js";
import type { FormHint } from "./form.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function money(x: number): string {
  return x.toFixed(2).replace(/\.00$/, "");
}

export function bundleLabel(items: number[]): string {
  return items.length ? `{${items.join(", ")}}` : "pass";
}

export function renderBoard(
  state: StatePayload,
  previous: StatePayload | null,
): string {
  const rows = state.prices
    .map((price, j) => {
      const w = state.winner[j];
      const owner = w < 0 ? "auctioneer" : `bidder ${w}`;
      const wasPrice = previous ? previous.prices[j] : null;
      const rose = wasPrice !== null && price > wasPrice;
      return (
        `<tr class="item${rose ? " raised" : ""}">` +
        `<td>item ${j}</td><td class="price">${money(price)}</td>` +
        `<td class="owner${w < 0 ? " unsold" : ""}">${owner}</td></tr>`
      );
    })
    .join("");
  const meters = state.eligibility
    .map((e, i) => {
      const before = previous ? previous.eligibility[i] : null;
      const dropped = before !== null && e < before;
      const share = state.m_items ? e / state.m_items : 0;
      return (
        `<div class="meter${dropped ? " drop" : ""}" data-bidder="${i}">` +
        `bidder ${i}${i === state.advised_bidder ? " (you)" : ""}: ` +
        `eligibility ${e}/${state.m_items}` +
        (dropped ? ` <span class="delta">was ${before}</span>` : "") +
        `<span class="bar" style="width:${Math.round(share * 100)}%"></span>` +
        ` budget left ${money(state.remaining_budgets[i])}` +
        `</div>`
      );
    })
    .join("");
  const banner = state.terminal
    ? `<div class="closing-banner">Auction closed after round ${state.round}.` +
      (state.final_utilities
        ? ` Final utilities: ${state.final_utilities.map(money).join(", ")}`
        : "") +
      `</div>`
    : "";
  return (
    `<section class="board" data-round="${state.round}">` +
    `<h2>Round ${state.round}${state.terminal ? " (closed)" : ""}</h2>` +
    banner +
    `<table class="items"><thead><tr><th>item</th><th>price</th><th>temporary winner</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    `<div class="bidders">${meters}</div>` +
    `</section>`
  );
}

export function renderHints(hints: FormHint[]): string {
  if (!hints.length) return `<div class="hints ok">ready to submit</div>`;
  const items = hints
    .map((h) => `<li class="hint ${h.code}">${esc(h.message)}</li>`)
    .join("");
  return `<ul class="hints blocking">${items}</ul>`;
}

export function renderServiceError(code: string, detail: string): string {
  return `<div class="service-error" data-code="${code}"><strong>${code}</strong> ${esc(detail)}</div>`;
}

export function renderRecommendation(view: RecommendationView): string {
  if (view.status === "idle") {
    return `<section class="recommendation idle">no recommendation requested</section>`;
  }
  if (view.status === "waiting") {
    return (
      `<section class="recommendation waiting">` +
      `<span class="spinner"></span> ${esc(view.detail)}</section>`
    );
  }
  const rec = view.payload;
  const rows = rec.root_table
    .map((row) => {
      const risky = row.a_alpha !== null && row.a_alpha < 0;
      const chosen =
        JSON.stringify(row.action) === JSON.stringify(rec.action);
      return (
        `<tr class="${chosen ? "chosen" : ""}${risky ? " loss-possible" : ""}">` +
        `<td>${bundleLabel(row.action)}</td>` +
        `<td>${row.n}</td>` +
        `<td>${row.mean === null ? "-" : row.mean.toFixed(3)}</td>` +
        `<td>${row.a_alpha === null ? "-" : row.a_alpha.toFixed(3)}</td>` +
        `<td>${row.c_alpha === null ? "-" : row.c_alpha.toFixed(3)}</td>` +
        `<td>${risky ? "loss observed" : "no loss seen"}</td></tr>`
      );
    })
    .join("");
  return (
    `<section class="recommendation ready${view.stale ? " stale" : ""}" data-round="${rec.round}">` +
    (view.stale ? `<div class="stale-note">computed for an earlier round</div>` : "") +
    `<h3>Recommended: <span class="action">${bundleLabel(rec.action)}</span></h3>` +
    `<div class="meta">${rec.iterations} iterations, ${rec.tree_size} nodes, ` +
    `${rec.elapsed_s.toFixed(2)}s</div>` +
    `<table class="root-table"><thead><tr>` +
    `<th>action</th><th>visits</th><th>mean</th><th>min</th><th>max</th><th>risk</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>` +
    `</section>`
  );
}

export function renderWhatIfCards(cards: WhatIfCard[]): string {
  if (!cards.length) {
    return `<section class="whatif empty">no what-if scenarios yet</section>`;
  }
  const rendered = cards
    .map((card) => {
      const p = card.payload;
      return (
        `<article class="whatif-card${card.stale ? " stale" : ""}" data-card="${card.id}">` +
        (card.stale ? `<div class="stale-note">round ${card.round} is over</div>` : "") +
        `<h4>bid ${bundleLabel(p.bid)}</h4>` +
        `<dl>` +
        `<dt>mean utility</dt><dd>${p.utility_mean.toFixed(3)}</dd>` +
        `<dt>min</dt><dd>${p.utility_min.toFixed(3)}</dd>` +
        `<dt>max</dt><dd>${p.utility_max.toFixed(3)}</dd>` +
        `<dt>exposure odds</dt><dd>${(p.exposure_frequency * 100).toFixed(1)}%</dd>` +
        `<dt>expected closing</dt><dd>${p.closing_price_means.map(money).join(", ")}</dd>` +
        `</dl>` +
        `<div class="order-controls">` +
        `<button data-move="-1" data-card="${card.id}">&#8593;</button>` +
        `<button data-move="1" data-card="${card.id}">&#8595;</button>` +
        `</div>` +
        `</article>`
      );
    })
    .join("");
  return `<section class="whatif">${rendered}</section>`;
}

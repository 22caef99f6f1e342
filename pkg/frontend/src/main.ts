/**
 * Browser entry point: single-page console with session URL routing
 * (#/session/<id>). Configuration is limited to the service base URL.
 */
import { HttpApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import {
  renderBoard,
  renderHints,
  renderRecommendation,
  renderServiceError,
  renderWhatIfCards,
} from "./render.js";

function currentSessionId(): string | null {
  const m = window.location.hash.match(/^#\/session\/(.+)$/);
  return m ? m[1] : null;
}

function parseBids(raw: string, n: number): number[][] {
  // one line per bidder: comma-separated item indices, blank = pass
  const lines = raw.split("\n");
  const bids: number[][] = [];
  for (let i = 0; i < n; i++) {
    const line = (lines[i] ?? "").trim();
    bids.push(line ? line.split(",").map((s) => parseInt(s.trim(), 10)) : []);
  }
  return bids;
}

function parseWinners(raw: string): Record<string, number> {
  // "item:bidder" pairs, comma separated
  const out: Record<string, number> = {};
  for (const pair of raw.split(",")) {
    const [item, bidder] = pair.split(":").map((s) => s.trim());
    if (item && bidder) out[item] = parseInt(bidder, 10);
  }
  return out;
}

async function boot(): Promise<void> {
  const app = document.getElementById("app");
  if (!app) return;
  const sessionId = currentSessionId();
  if (!sessionId) {
    app.innerHTML =
      `<p>Open a session via <code>#/session/&lt;id&gt;</code>. ` +
      `Sessions are created through the advisor service API.</p>`;
    return;
  }
  const baseUrl =
    new URLSearchParams(window.location.search).get("service") ??
    window.location.origin;
  const controller = new SessionController(new HttpApiClient(baseUrl), sessionId);

  const redraw = () => {
    const v = controller.view;
    if (!v.state) return;
    const bidsRaw =
      (document.getElementById("bids") as HTMLTextAreaElement | null)?.value ?? "";
    const winnersRaw =
      (document.getElementById("winners") as HTMLInputElement | null)?.value ?? "";
    const bids = parseBids(bidsRaw, v.state.n_bidders);
    const hints = controller.hints(bids, parseWinners(winnersRaw));
    app.innerHTML = `
      ${renderBoard(v.state, v.previous)}
      <section class="entry">
        <h3>Record observed round ${v.state.round}</h3>
        <textarea id="bids" rows="${v.state.n_bidders}" placeholder="items per bidder, one line each">${bidsRaw}</textarea>
        <input id="winners" placeholder="tie winners as item:bidder, ..." value="${winnersRaw}">
        ${renderHints(hints)}
        ${v.lastError ? renderServiceError(v.lastError.code, v.lastError.detail) : ""}
        <button id="submit" ${hints.length || !controller.canSubmit() || v.state.terminal ? "disabled" : ""}>
          submit round
        </button>
        <button id="recommend" ${v.state.terminal ? "disabled" : ""}>get recommendation</button>
        <button id="whatif" ${v.state.terminal ? "disabled" : ""}>what if (advised bidder's line)</button>
      </section>
      ${renderRecommendation(v.recommendation)}
      ${renderWhatIfCards(v.whatIfCards)}
    `;
    bind();
  };

  const bind = () => {
    document.getElementById("submit")?.addEventListener("click", async () => {
      const v = controller.view;
      if (!v.state) return;
      const bids = parseBids(
        (document.getElementById("bids") as HTMLTextAreaElement).value,
        v.state.n_bidders,
      );
      const winners = parseWinners(
        (document.getElementById("winners") as HTMLInputElement).value,
      );
      await controller.submitRound(bids, winners);
      redraw();
    });
    document.getElementById("recommend")?.addEventListener("click", async () => {
      controller.requestRecommendation().then(redraw);
      redraw();
    });
    document.getElementById("whatif")?.addEventListener("click", async () => {
      const v = controller.view;
      if (!v.state) return;
      const bids = parseBids(
        (document.getElementById("bids") as HTMLTextAreaElement).value,
        v.state.n_bidders,
      );
      await controller.runWhatIf(bids[v.state.advised_bidder] ?? []);
      redraw();
    });
    document.querySelectorAll("button[data-move]").forEach((btn) => {
      btn.addEventListener("click", () => {
        const el = btn as HTMLButtonElement;
        controller.view.moveCard(
          parseInt(el.dataset.card ?? "0", 10),
          parseInt(el.dataset.move ?? "0", 10),
        );
        redraw();
      });
    });
    document.getElementById("bids")?.addEventListener("input", redraw);
    document.getElementById("winners")?.addEventListener("input", redraw);
  };

  await controller.refreshState();
  redraw();
  window.addEventListener("hashchange", () => window.location.reload());
}

boot();

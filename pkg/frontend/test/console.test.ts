/**
 * Contract tests against recorded advisor-service fixtures.
 *
 * The console must replay a full session (three rounds including a tie
 * entry, a recommendation, a what-if card) rendering nothing but what the
 * service said, and block submissions rejected with BUDGET/ELIGIBILITY
 * codes. No live engine runs here.
 */
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { beforeEach, describe, expect, it } from "vitest";

import { SessionController } from "../src/controller.js";
import { FixtureClient, FixtureFile } from "../src/fixtures.js";
import { roundFormHints } from "../src/form.js";
import {
  renderBoard,
  renderRecommendation,
  renderServiceError,
  renderWhatIfCards,
} from "../src/render.js";
import { StatePayload } from "../src/types.js";

const fixturePath = fileURLToPath(
  new URL("../fixtures/recorded_session.json", import.meta.url),
);

function loadFixture(): FixtureFile {
  return JSON.parse(readFileSync(fixturePath, "utf-8")) as FixtureFile;
}

function mainSessionId(fx: FixtureFile): string {
  const create = fx.exchanges.find((e) => e.kind === "create");
  return (create!.response as { session_id: string }).session_id;
}

function sessionIdOf(fx: FixtureFile, kind: string): string {
  const create = fx.exchanges.find((e) => e.kind === kind);
  return (create!.response as { session_id: string }).session_id;
}

function roundBodies(fx: FixtureFile, sessionId: string) {
  return fx.exchanges.filter(
    (e) =>
      e.kind === "round" && e.path === `/sessions/${sessionId}/rounds`,
  );
}

describe("full recorded session", () => {
  let fx: FixtureFile;
  let controller: SessionController;
  let sid: string;

  beforeEach(async () => {
    fx = loadFixture();
    sid = mainSessionId(fx);
    controller = new SessionController(new FixtureClient(fx), sid);
    await controller.refreshState();
  });

  it("renders round 0 fresh board: zero prices, everything with the auctioneer", () => {
    const state = controller.view.state!;
    expect(state.round).toBe(0);
    const html = renderBoard(state, null);
    expect(html).toContain("Round 0");
    const priceCells = html.match(/<td class="price">([^<]*)<\/td>/g)!;
    for (const cell of priceCells) expect(cell).toContain(">0<");
    expect((html.match(/auctioneer/g) ?? []).length).toBe(state.m_items);
  });

  it("replays three recorded rounds, tie entry included, straight from responses", async () => {
    const rounds = roundBodies(fx, sid);
    expect(rounds.length).toBeGreaterThanOrEqual(3);
    const tieRound = rounds[0].request as { observed_winners: Record<string, number> };
    expect(Object.keys(tieRound.observed_winners).length).toBeGreaterThan(0);

    for (const ex of rounds) {
      const body = ex.request as {
        round: number;
        bids: number[][];
        observed_winners: Record<string, number>;
      };
      const ok = await controller.submitRound(body.bids, body.observed_winners);
      expect(ok).toBe(true);
      // the store must hold the service's response verbatim
      expect(controller.view.state).toEqual(StatePayload.parse(ex.response));
    }
    expect(controller.view.timeline.length).toBe(rounds.length + 1);
  });

  it("highlights an eligibility drop between consecutive rounds", async () => {
    const rounds = roundBodies(fx, sid);
    const body = rounds[0].request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    await controller.submitRound(body.bids, body.observed_winners);
    const html = renderBoard(controller.view.state!, controller.view.previous);
    // the advised bidder's eligibility fell from 2 to 1 in the fixture
    expect(html).toContain('class="meter drop"');
    expect(html).toContain("was 2");
  });

  it("renders the recommendation table with risk annotations", async () => {
    // play the session forward to the recorded recommendation point
    for (const ex of roundBodies(fx, sid)) {
      const body = ex.request as {
        bids: number[][];
        observed_winners: Record<string, number>;
      };
      await controller.submitRound(body.bids, body.observed_winners);
    }
    await controller.requestRecommendation();
    const view = controller.view.recommendation;
    expect(view.status).toBe("ready");
    const html = renderRecommendation(view);
    const recorded = fx.exchanges.find((e) => e.kind === "recommendation")!;
    const action = (recorded.response as { action: number[] }).action;
    expect(html).toContain(`Recommended: <span class="action">{${action.join(", ")}}`);
    expect(html).toContain("<th>min</th>");
    expect(html).toContain("<th>max</th>");
    expect(html).toContain("no loss seen");
  });

  it("shows a what-if card with mean/min/max and exposure odds", async () => {
    for (const ex of roundBodies(fx, sid)) {
      const body = ex.request as {
        bids: number[][];
        observed_winners: Record<string, number>;
      };
      await controller.submitRound(body.bids, body.observed_winners);
    }
    const recorded = fx.exchanges.find((e) => e.kind === "whatif")!;
    const req = recorded.request as { items: number[]; samples: number };
    const ok = await controller.runWhatIf(req.items, req.samples);
    expect(ok).toBe(true);
    const html = renderWhatIfCards(controller.view.whatIfCards);
    expect(html).toContain("exposure odds");
    expect(html).toContain("mean utility");
    expect(html).toContain(`bid {${req.items.join(", ")}}`);
  });

  it("marks what-if cards stale once a later round is recorded", async () => {
    const rounds = roundBodies(fx, sid);
    const first = rounds[0].request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    await controller.submitRound(first.bids, first.observed_winners);
    // inject a card for the current round, then advance
    controller.view.acceptWhatIf({
      bid: [0],
      samples: 10,
      utility_mean: 1,
      utility_min: 0,
      utility_max: 2,
      exposure_frequency: 0,
      closing_price_means: [1, 1],
    });
    const second = rounds[1].request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    await controller.submitRound(second.bids, second.observed_winners);
    expect(controller.view.whatIfCards[0].stale).toBe(true);
    expect(renderWhatIfCards(controller.view.whatIfCards)).toContain("stale");
  });

  it("lets the operator reorder persistent cards", () => {
    const payload = {
      bid: [0], samples: 1, utility_mean: 0, utility_min: 0, utility_max: 0,
      exposure_frequency: 0, closing_price_means: [0, 0],
    };
    controller.view.acceptState(controller.view.state!);
    controller.view.acceptWhatIf({ ...payload, bid: [0] });
    controller.view.acceptWhatIf({ ...payload, bid: [1] });
    const [a, b] = controller.view.whatIfCards.map((c) => c.id);
    controller.view.moveCard(b, -1);
    expect(controller.view.whatIfCards.map((c) => c.id)).toEqual([b, a]);
  });
});

describe("rejected submissions", () => {
  it("surfaces the ELIGIBILITY code and leaves the board untouched", async () => {
    const fx = loadFixture();
    const sid = mainSessionId(fx);
    const controller = new SessionController(new FixtureClient(fx), sid);
    await controller.refreshState();
    const rounds = roundBodies(fx, sid);
    const first = rounds[0].request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    await controller.submitRound(first.bids, first.observed_winners);
    const before = controller.view.state;

    const rejected = fx.exchanges.find(
      (e) => e.kind === "round_rejected_eligibility",
    )!;
    const body = rejected.request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    const ok = await controller.submitRound(body.bids, body.observed_winners);
    expect(ok).toBe(false);
    expect(controller.view.lastError?.code).toBe("ELIGIBILITY");
    expect(controller.view.state).toEqual(before);
    expect(
      renderServiceError(controller.view.lastError!.code, controller.view.lastError!.detail),
    ).toContain('data-code="ELIGIBILITY"');
  });

  it("surfaces the BUDGET code from the tight-budget session", async () => {
    const fx = loadFixture();
    const sid = sessionIdOf(fx, "create_tight");
    const controller = new SessionController(new FixtureClient(fx), sid);
    const rejected = fx.exchanges.find((e) => e.kind === "round_rejected_budget")!;
    const createExchange = fx.exchanges.find((e) => e.kind === "create_tight")!;
    controller.view.acceptState(
      StatePayload.parse(
        (createExchange.response as { state: unknown }).state,
      ),
    );
    const body = rejected.request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    const ok = await controller.submitRound(body.bids, body.observed_winners);
    expect(ok).toBe(false);
    expect(controller.view.lastError?.code).toBe("BUDGET");
  });
});

describe("client-side hints (advisory only)", () => {
  function baseState(): StatePayload {
    const fx = loadFixture();
    const create = fx.exchanges.find((e) => e.kind === "create")!;
    return StatePayload.parse((create.response as { state: unknown }).state);
  }

  it("flags over-budget entries before submission", () => {
    const state = { ...baseState(), remaining_budgets: [1.5, 100] };
    const hints = roundFormHints(state, [[0, 1], []], {});
    expect(hints.some((h) => h.code === "BUDGET" && h.bidder === 0)).toBe(true);
  });

  it("demands an observed winner for tied items", () => {
    const state = baseState();
    const hints = roundFormHints(state, [[0], [0, 1]], {});
    expect(hints.some((h) => h.code === "TIE_NEEDS_WINNER")).toBe(true);
    const resolved = roundFormHints(state, [[0], [0, 1]], { "0": 1 });
    expect(resolved.some((h) => h.code === "TIE_NEEDS_WINNER")).toBe(false);
  });

  it("flags eligibility and already-winning violations", () => {
    const state = {
      ...baseState(),
      winner: [0, -1],
      eligibility: [1, 2],
      ticks: [1, 0],
      prices: [1, 0],
    };
    const again = roundFormHints(state, [[0], []], {});
    expect(again.some((h) => h.code === "ALREADY_WINNING")).toBe(true);
    const tooMany = roundFormHints(state, [[1], []], {});
    expect(tooMany.some((h) => h.code === "ELIGIBILITY")).toBe(true);
  });
});

describe("zero local state transitions", () => {
  it("renders tampered service prices verbatim, proving no local recompute", async () => {
    const fx = loadFixture();
    const sid = mainSessionId(fx);
    // tamper: the first round response claims an impossible price jump
    const tampered = JSON.parse(JSON.stringify(fx)) as FixtureFile;
    const ex = tampered.exchanges.find(
      (e) => e.kind === "round" && e.path === `/sessions/${sid}/rounds`,
    )!;
    (ex.response as { prices: number[] }).prices = [77, 77];
    (ex.response as { ticks: number[] }).ticks = [77, 77];

    const controller = new SessionController(new FixtureClient(tampered), sid);
    await controller.refreshState();
    const body = ex.request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    await controller.submitRound(body.bids, body.observed_winners);
    const html = renderBoard(controller.view.state!, controller.view.previous);
    expect(html).toContain(">77<");
  });

  it("renders the recorded terminal state with the closing banner", () => {
    const fx = loadFixture();
    const terminal = fx.exchanges.find((e) => e.kind === "round_terminal")!;
    const state = StatePayload.parse(terminal.response);
    expect(state.terminal).toBe(true);
    const html = renderBoard(state, null);
    expect(html).toContain("closing-banner");
    expect(html).toContain("Final utilities");
  });
});

describe("polling discipline", () => {
  it("blocks submission while a recommendation poll is in flight", async () => {
    const fx = loadFixture();
    const sid = mainSessionId(fx);
    const controller = new SessionController(new FixtureClient(fx), sid);
    await controller.refreshState();
    controller.view.polling = true;
    expect(controller.canSubmit()).toBe(false);
    const rounds = roundBodies(fx, sid);
    const body = rounds[0].request as {
      bids: number[][];
      observed_winners: Record<string, number>;
    };
    const ok = await controller.submitRound(body.bids, body.observed_winners);
    expect(ok).toBe(false);
    controller.view.polling = false;
    expect(controller.canSubmit()).toBe(true);
  });
});

#!/usr/bin/env python3
"""Record advisor-service fixtures for the web console's contract tests.

Replays a complete session on the canonical 2x2 exposure instance (three
rounds including one observed tie, a recommendation, a what-if query and
two rejected submissions) and saves every request/response pair verbatim.
The frontend test suite runs against this file with no live engine.
"""

import json
import time
from pathlib import Path

from fastapi.testclient import TestClient

from saabid.advisor.service import create_app
from saabid.advisor.sessions import SessionStore

OUT = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


def wait_ready(client, sid):
    for _ in range(3000):
        state = client.get(f"/sessions/{sid}/state").json()
        if state["prediction"]["status"] == "ready":
            return state
        time.sleep(0.02)
    raise TimeoutError("prediction never became ready")


def main():
    client = TestClient(create_app(SessionStore()))
    fixture = {"base_url": "http://fixture.local", "exchanges": []}

    def record(kind, method, path, body, resp):
        fixture["exchanges"].append(
            {
                "kind": kind,
                "method": method,
                "path": path,
                "request": body,
                "status": resp.status_code,
                "response": resp.json(),
            }
        )
        return resp

    create_body = {
        "n_bidders": 2,
        "m_items": 2,
        "epsilon": 1.0,
        "profiles": [
            {"budget": 100.0, "values": [0.0, 12.0, 12.0, 12.0]},
            {"budget": 100.0, "values": [0.0, 0.0, 0.0, 20.0]},
        ],
        "advised_bidder": 0,
        "seed": 11,
        "search": {"alpha": 7.0, "n_act": 4, "r_max": 10, "iterations": 4000},
        "prediction": {"mc_samples": 600, "max_iters": 60},
    }
    resp = record("create", "POST", "/sessions", create_body,
                  client.post("/sessions", json=create_body))
    sid = resp.json()["session_id"]
    wait_ready(client, sid)
    record("state", "GET", f"/sessions/{sid}/state", None,
           client.get(f"/sessions/{sid}/state"))

    # round 0: both bid item 0 (a tie, resolved by the observed outcome);
    # the complements bidder also takes item 1
    r0 = {"round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1}}
    record("round", "POST", f"/sessions/{sid}/rounds", r0,
           client.post(f"/sessions/{sid}/rounds", json=r0))

    # rejected: the advised bidder's eligibility dropped to 1, two bids illegal
    bad_elig = {"round": 1, "bids": [[0, 1], []], "observed_winners": {}}
    record("round_rejected_eligibility", "POST", f"/sessions/{sid}/rounds", bad_elig,
           client.post(f"/sessions/{sid}/rounds", json=bad_elig))

    r1 = {"round": 1, "bids": [[0], []], "observed_winners": {}}
    record("round", "POST", f"/sessions/{sid}/rounds", r1,
           client.post(f"/sessions/{sid}/rounds", json=r1))

    r2 = {"round": 2, "bids": [[], [0]], "observed_winners": {}}
    record("round", "POST", f"/sessions/{sid}/rounds", r2,
           client.post(f"/sessions/{sid}/rounds", json=r2))

    record("state", "GET", f"/sessions/{sid}/state", None,
           client.get(f"/sessions/{sid}/state"))
    record("recommendation", "GET", f"/sessions/{sid}/recommendation", None,
           client.get(f"/sessions/{sid}/recommendation"))
    whatif = {"items": [1], "samples": 200}
    record("whatif", "POST", f"/sessions/{sid}/what-if", whatif,
           client.post(f"/sessions/{sid}/what-if", json=whatif))
    record("trace", "GET", f"/sessions/{sid}/trace", None,
           client.get(f"/sessions/{sid}/trace"))

    # a separate tight-budget session for the BUDGET rejection fixture
    tight = dict(create_body, profiles=[
        {"budget": 1.5, "values": [0.0, 12.0, 12.0, 12.0]},
        {"budget": 100.0, "values": [0.0, 0.0, 0.0, 20.0]},
    ], prediction={"mc_samples": 50, "max_iters": 5})
    resp = record("create_tight", "POST", "/sessions", tight,
                  client.post("/sessions", json=tight))
    sid2 = resp.json()["session_id"]
    bad_budget = {"round": 0, "bids": [[0, 1], []], "observed_winners": {}}
    record("round_rejected_budget", "POST", f"/sessions/{sid2}/rounds", bad_budget,
           client.post(f"/sessions/{sid2}/rounds", json=bad_budget))

    # a short session driven to termination, for the closing-banner fixture
    resp = record("create_terminal", "POST", "/sessions", create_body,
                  client.post("/sessions", json=create_body))
    sid3 = resp.json()["session_id"]
    t0 = {"round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1}}
    record("round_terminal_path", "POST", f"/sessions/{sid3}/rounds", t0,
           client.post(f"/sessions/{sid3}/rounds", json=t0))
    t1 = {"round": 1, "bids": [[], []], "observed_winners": {}}
    record("round_terminal", "POST", f"/sessions/{sid3}/rounds", t1,
           client.post(f"/sessions/{sid3}/rounds", json=t1))

    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / "recorded_session.json"
    path.write_text(json.dumps(fixture, indent=2, sort_keys=True))
    print(f"wrote {path} ({len(fixture['exchanges'])} exchanges)")


if __name__ == "__main__":
    main()

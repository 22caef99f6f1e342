"""Advisor service: sessions over HTTP, recommendations, what-if, errors."""

import time

from fastapi.testclient import TestClient

from saabid.advisor.service import create_app
from saabid.advisor.sessions import SessionStore

EXPOSURE_PROFILES = [
    {"budget": 100.0, "values": [0.0, 12.0, 12.0, 12.0]},
    {"budget": 100.0, "values": [0.0, 0.0, 0.0, 20.0]},
]


def make_client():
    return TestClient(create_app(SessionStore()))


def create_session(client, advised=0, profiles=None, budgets=None, search=None,
                   prediction=None, seed=0):
    profiles = profiles or [dict(p) for p in EXPOSURE_PROFILES]
    if budgets is not None:
        for p, b in zip(profiles, budgets):
            p["budget"] = b
    body = {
        "n_bidders": 2,
        "m_items": 2,
        "epsilon": 1.0,
        "profiles": profiles,
        "advised_bidder": advised,
        "seed": seed,
        "search": search or {"alpha": 7.0, "n_act": 4, "r_max": 10, "iterations": 2000},
        "prediction": prediction or {"mc_samples": 400, "max_iters": 40},
    }
    resp = client.post("/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()["session_id"]


def wait_ready(client, sid, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"/sessions/{sid}/state").json()
        if state["prediction"]["status"] == "ready":
            return
        time.sleep(0.02)
    raise TimeoutError("prediction never became ready")


class TestCreate:
    def test_create_and_first_recommendation(self):
        client = make_client()
        sid = create_session(client, advised=0)
        wait_ready(client, sid)
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        assert rec["status"] == "ready"
        assert rec["action"] == [0]  # substitutes bidder raises the first item
        assert any(row["action"] == [0] for row in rec["root_table"])

    def test_single_bidder_rejected(self):
        client = make_client()
        body = {
            "n_bidders": 1, "m_items": 2, "epsilon": 1.0,
            "profiles": [EXPOSURE_PROFILES[0]], "advised_bidder": 0,
        }
        resp = client.post("/sessions", json=body)
        assert resp.status_code == 422
        assert resp.json()["code"] == "VALIDATION"

    def test_duplicate_creates_are_independent(self):
        client = make_client()
        a = create_session(client)
        b = create_session(client)
        assert a != b
        client.post(f"/sessions/{a}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1},
        })
        state_b = client.get(f"/sessions/{b}/state").json()
        assert state_b["round"] == 0

    def test_free_disposal_violation_rejected_with_pair(self):
        client = make_client()
        bad = [
            {"budget": 10.0, "values": [0.0, 5.0, 1.0, 3.0]},
            dict(EXPOSURE_PROFILES[1]),
        ]
        resp = client.post("/sessions", json={
            "n_bidders": 2, "m_items": 2, "epsilon": 1.0,
            "profiles": bad, "advised_bidder": 0,
        })
        assert resp.status_code == 422
        assert "free disposal" in resp.json()["detail"]
        assert "[0]" in resp.json()["detail"]

    def test_unknown_session_404(self):
        client = make_client()
        resp = client.get("/sessions/nope/state")
        assert resp.status_code == 404
        assert resp.json()["code"] == "NOT_FOUND"


class TestRecordRound:
    def test_observed_tie_branch(self):
        client = make_client()
        sid = create_session(client)
        resp = client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1},
        })
        state = resp.json()
        assert state["ticks"] == [1, 1]
        assert state["winner"] == [1, 1]
        assert state["round"] == 1
        assert state["eligibility"] == [1, 2]

    def test_all_pass_terminal_with_utilities(self):
        client = make_client()
        sid = create_session(client)
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1},
        })
        resp = client.post(f"/sessions/{sid}/rounds", json={
            "round": 1, "bids": [[], []], "observed_winners": {},
        })
        state = resp.json()
        assert state["terminal"] is True
        assert state["final_utilities"] == [0.0, 18.0]

    def test_out_of_order_round_rejected_idempotent(self):
        client = make_client()
        sid = create_session(client)
        before = client.get(f"/sessions/{sid}/state").json()
        resp = client.post(f"/sessions/{sid}/rounds", json={
            "round": 3, "bids": [[0], []], "observed_winners": {},
        })
        assert resp.status_code == 409
        after = client.get(f"/sessions/{sid}/state").json()
        assert after["round"] == before["round"]
        assert after["ticks"] == before["ticks"]

    def test_illegal_bid_rejected_with_code(self):
        client = make_client()
        sid = create_session(client, budgets=[1.0, 100.0])
        resp = client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0, 1], []], "observed_winners": {},
        })
        assert resp.status_code == 422
        assert resp.json()["code"] == "BUDGET"

    def test_winner_for_unbid_item_rejected(self):
        client = make_client()
        sid = create_session(client)
        resp = client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], []], "observed_winners": {"1": 0},
        })
        assert resp.status_code == 422

    def test_tie_requires_observed_winner(self):
        client = make_client()
        sid = create_session(client)
        resp = client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {},
        })
        assert resp.status_code == 422
        assert "tied" in resp.json()["detail"]


class TestRecommend:
    def test_not_ready_then_ready(self):
        client = make_client()
        sid = create_session(
            client, prediction={"mc_samples": 4000, "max_iters": 200, "tolerance": 1e-9}
        )
        first = client.get(f"/sessions/{sid}/recommendation")
        if first.status_code == 409:
            assert first.json()["code"] == "NOT_READY"
        wait_ready(client, sid, timeout=120)
        rec = client.get(f"/sessions/{sid}/recommendation")
        assert rec.status_code == 200

    def test_terminal_session_rejected(self):
        client = make_client()
        sid = create_session(client)
        wait_ready(client, sid)
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[], []], "observed_winners": {},
        })
        resp = client.get(f"/sessions/{sid}/recommendation")
        assert resp.status_code == 409
        assert resp.json()["code"] == "TERMINAL"

    def test_exposure_scenario_recommends_dropout(self):
        client = make_client()
        sid = create_session(client, advised=1, budgets=[12.0, 16.0])
        wait_ready(client, sid)
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        assert rec["action"] == []

    def test_demand_reduction_scenario(self):
        client = make_client()
        additive = [0.0, 10.0, 10.0, 20.0]
        body = {
            "n_bidders": 2, "m_items": 2, "epsilon": 0.1,
            "profiles": [
                {"budget": 20.0, "values": additive},
                {"budget": 7.0, "values": additive},
            ],
            "advised_bidder": 0, "seed": 0,
            "search": {"alpha": 7.0, "n_act": 4, "r_max": 10, "iterations": 4000},
            "prediction": {"mc_samples": 300, "max_iters": 40},
        }
        sid = client.post("/sessions", json=body).json()["session_id"]
        wait_ready(client, sid)
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        assert len(rec["action"]) == 1  # reduced demand, not the greedy pair


class TestWhatIf:
    def test_read_only_and_deterministic(self):
        client = make_client()
        sid = create_session(client)
        wait_ready(client, sid)
        rec_before = client.get(f"/sessions/{sid}/recommendation").json()
        w1 = client.post(f"/sessions/{sid}/what-if",
                         json={"items": [0], "samples": 50}).json()
        w2 = client.post(f"/sessions/{sid}/what-if",
                         json={"items": [0], "samples": 50}).json()
        assert w1 == w2
        rec_after = client.get(f"/sessions/{sid}/recommendation").json()
        assert rec_before == rec_after
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["round"] == 0

    def test_over_budget_rejected(self):
        client = make_client()
        sid = create_session(client, budgets=[1.0, 100.0])
        wait_ready(client, sid)
        resp = client.post(f"/sessions/{sid}/what-if", json={"items": [0, 1]})
        assert resp.status_code == 422
        assert resp.json()["code"] == "BUDGET"

    def test_terminalizing_pass_deterministic(self):
        client = make_client()
        sid = create_session(client, budgets=[100.0, 0.0])
        wait_ready(client, sid)
        resp = client.post(f"/sessions/{sid}/what-if",
                           json={"items": [], "samples": 30}).json()
        # opponent cannot bid; passing closes the auction at zero utility
        assert resp["utility_mean"] == 0.0
        assert resp["utility_min"] == resp["utility_max"] == 0.0
        assert resp["exposure_frequency"] == 0.0

    def test_matches_recommendation_mean_in_degenerate_case(self):
        client = make_client()
        sid = create_session(client, budgets=[100.0, 0.0],
                             search={"alpha": 0.0, "n_act": 4, "iterations": 500})
        wait_ready(client, sid)
        rec = client.get(f"/sessions/{sid}/recommendation").json()
        row = next(r for r in rec["root_table"] if r["action"] == rec["action"])
        w = client.post(f"/sessions/{sid}/what-if",
                        json={"items": rec["action"], "samples": 300}).json()
        assert abs(w["utility_mean"] - row["mean"]) < 0.5


class TestProfilesAndTrace:
    def test_edit_profiles_recomputes_prediction(self):
        client = make_client()
        sid = create_session(client)
        wait_ready(client, sid)
        resp = client.patch(f"/sessions/{sid}/profiles", json={
            "profiles": [
                {"budget": 50.0, "values": [0.0, 12.0, 12.0, 12.0]},
                {"budget": 16.0, "values": [0.0, 0.0, 0.0, 20.0]},
            ],
        })
        assert resp.status_code == 200
        wait_ready(client, sid)
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["budgets"] == [50.0, 16.0]

    def test_edit_rejected_if_history_becomes_illegal(self):
        client = make_client()
        sid = create_session(client)
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1},
        })
        resp = client.patch(f"/sessions/{sid}/profiles", json={
            "profiles": [
                {"budget": 0.5, "values": [0.0, 12.0, 12.0, 12.0]},
                dict(EXPOSURE_PROFILES[1]),
            ],
        })
        assert resp.status_code == 422
        assert resp.json()["code"] == "BUDGET"

    def test_trace_export_matches_rounds(self):
        client = make_client()
        sid = create_session(client)
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1},
        })
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 1, "bids": [[1], []], "observed_winners": {},
        })
        records = client.get(f"/sessions/{sid}/trace").json()["records"]
        assert len(records) == 2
        assert records[0]["round"] == 1
        assert records[0]["ticks"] == [1, 1]
        assert records[1]["bids"] == [[1], []]

    def test_replay_integrity(self):
        store = SessionStore()
        client = TestClient(create_app(store))
        sid = create_session(client)
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 0, "bids": [[0], [0, 1]], "observed_winners": {"0": 1},
        })
        client.post(f"/sessions/{sid}/rounds", json={
            "round": 1, "bids": [[1], []], "observed_winners": {},
        })
        session = store.get(sid)
        assert store.verify_replay(session)

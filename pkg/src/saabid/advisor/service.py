"""HTTP surface of the advisor: JSON over REST, stateless between requests.

Rule-violation errors carry machine-readable codes (BUDGET, ELIGIBILITY,
ALREADY_WINNING, NOT_READY, TERMINAL) that the web console surfaces verbatim.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from ..auction import AuctionConfig, BidderProfile
from ..prediction import PredictorParams
from ..search import SearchParams
from ..valuations import ValueFunction
from .sessions import AdvisorError, Session, SessionStore


class ProfileBody(BaseModel):
    budget: float
    values: list[float] = Field(description="bundle table in bitmask order")


class CreateSessionBody(BaseModel):
    n_bidders: int
    m_items: int
    epsilon: float
    profiles: list[ProfileBody]
    advised_bidder: int
    seed: int = 0
    search: dict = Field(default_factory=dict)
    prediction: dict = Field(default_factory=dict)


class RecordRoundBody(BaseModel):
    round: int
    bids: list[list[int]]
    observed_winners: dict[int, int] = Field(default_factory=dict)


class WhatIfBody(BaseModel):
    items: list[int]
    samples: int = 200
    horizon: Optional[int] = None


class EditProfilesBody(BaseModel):
    profiles: list[ProfileBody]


def _profiles_from(m_items: int, bodies: list[ProfileBody]) -> list[BidderProfile]:
    out = []
    for body in bodies:
        table = np.asarray(body.values, dtype=np.float64)
        out.append(BidderProfile(budget=body.budget, values=ValueFunction(m_items, table)))
    return out


def _state_payload(session: Session, store: SessionStore) -> dict:
    state = session.state
    eps = session.config.epsilon
    payload = {
        "session_id": session.session_id,
        "round": state.round,
        "ticks": list(state.ticks),
        "prices": [t * eps for t in state.ticks],
        "winner": list(state.winner),
        "eligibility": list(state.eligibility),
        "terminal": state.terminal,
        "epsilon": eps,
        "n_bidders": session.config.n_bidders,
        "m_items": session.config.m_items,
        "advised_bidder": session.advised,
        "budgets": [p.budget for p in session.profiles],
        "remaining_budgets": [
            session.profiles[i].budget
            - sum(state.ticks[j] * eps for j in state.won_by(i))
            for i in range(session.config.n_bidders)
        ],
        "prediction": store.prediction_status(session),
    }
    utilities = store.final_utilities(session)
    if utilities is not None:
        payload["final_utilities"] = utilities
    return payload


def create_app(store: SessionStore | None = None) -> FastAPI:
    app = FastAPI(title="saabid advisor")
    store = store if store is not None else SessionStore()
    app.state.store = store

    @app.exception_handler(AdvisorError)
    async def advisor_error(_req: Request, exc: AdvisorError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "detail": exc.detail}
        )

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            config = AuctionConfig(body.n_bidders, body.m_items, body.epsilon, body.seed)
        except ValueError as e:
            raise AdvisorError("VALIDATION", str(e), 422)
        try:
            profiles = _profiles_from(body.m_items, body.profiles)
            search_params = SearchParams(**body.search)
            predictor_params = PredictorParams(
                **{"mc_samples": 500, "max_iters": 100, **body.prediction}
            )
        except (ValueError, TypeError) as e:
            raise AdvisorError("VALIDATION", str(e), 422)
        session = store.create(
            config, profiles, body.advised_bidder, search_params, predictor_params,
            seed=body.seed,
        )
        return {"session_id": session.session_id, "state": _state_payload(session, store)}

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        return _state_payload(store.get(session_id), store)

    @app.post("/sessions/{session_id}/rounds")
    def record_round(session_id: str, body: RecordRoundBody):
        session = store.get(session_id)
        store.record_round(session, body.round, body.bids, body.observed_winners)
        return _state_payload(session, store)

    @app.get("/sessions/{session_id}/recommendation")
    def recommendation(session_id: str):
        session = store.get(session_id)
        return {"status": "ready", **store.recommend(session)}

    @app.post("/sessions/{session_id}/what-if")
    def what_if(session_id: str, body: WhatIfBody):
        session = store.get(session_id)
        return store.what_if(session, body.items, body.samples, body.horizon)

    @app.patch("/sessions/{session_id}/profiles")
    def edit_profiles(session_id: str, body: EditProfilesBody):
        session = store.get(session_id)
        store.edit_profiles(session, _profiles_from(session.config.m_items, body.profiles))
        return _state_payload(session, store)

    @app.get("/sessions/{session_id}/trace")
    def export_trace(session_id: str):
        session = store.get(session_id)
        return {"records": [r.to_dict() for r in session.trace]}

    return app

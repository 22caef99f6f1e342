"""Advisor sessions: recorded live auctions with search-backed recommendations.

A session mirrors one real (or replayed) auction from the advised bidder's
side: the operator records each observed round (tie outcomes included, since
the real auction already resolved them), asks for a recommendation at the
current state, and runs read-only what-if simulations.  All randomness in
simulated futures derives from the session seed and the query itself, so
what-if calls can never perturb later results.
"""

from __future__ import annotations

import threading
import uuid
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import backend
from .._bits import SplitMix64, mask_of
from ..auction import (
    AuctionConfig,
    AuctionState,
    BidderProfile,
    IllegalBidError,
    RoundRecord,
    apply_round,
    apply_round_observed,
    check_bid_legal,
    outcome_of,
    pack_profiles,
    termination_bound,
)
from ..prediction import PredictorParams, iterate_prediction
from ..search import SearchParams, SearchResult, search
from ..strategies import pp_bid
from ..valuations import find_free_disposal_violation, instance_to_dict


class AdvisorError(Exception):
    def __init__(self, code: str, detail: str, status: int = 409):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.status = status


@dataclass
class RecordedRound:
    bids: list[list[int]]
    observed_winners: dict[int, int]


@dataclass
class Session:
    session_id: str
    config: AuctionConfig
    profiles: list[BidderProfile]
    advised: int
    search_params: SearchParams
    predictor_params: PredictorParams
    seed: int
    state: AuctionState
    history: list[RecordedRound] = field(default_factory=list)
    trace: list[RoundRecord] = field(default_factory=list)
    p_star: np.ndarray | None = None
    p_progress: tuple[int, int] = (0, 0)
    p_error: str | None = None
    recommendation: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _validate_profiles(config: AuctionConfig, profiles: Sequence[BidderProfile]):
    if len(profiles) != config.n_bidders:
        raise AdvisorError("VALIDATION", "profile count must match the bidder count", 422)
    for i, p in enumerate(profiles):
        if p.values.m_items != config.m_items:
            raise AdvisorError("VALIDATION", f"bidder {i} value table has wrong item count", 422)
        violation = find_free_disposal_violation(p.values)
        if violation is not None:
            sub, sup = violation
            raise AdvisorError(
                "VALIDATION",
                f"bidder {i} violates free disposal: v({sorted(sub)}) > v({sorted(sup)})",
                422,
            )


def _replay(config, profiles, history: list[RecordedRound]) -> AuctionState:
    state = AuctionState.initial(config)
    for rec in history:
        state = apply_round_observed(
            state, [frozenset(b) for b in rec.bids], rec.observed_winners, profiles
        )
    return state


class SessionStore:
    """In-memory session registry; a global cache shares prediction vectors."""

    def __init__(self, compute_async: bool = True):
        self._sessions: dict[str, Session] = {}
        self._p_cache: dict[int, np.ndarray] = {}
        self._compute_async = compute_async

    def _cache_key(self, config, profiles) -> int:
        blob = repr(instance_to_dict(config, profiles)).encode()
        return zlib.crc32(blob)

    def _start_prediction(self, session: Session):
        key = self._cache_key(session.config, session.profiles)
        cached = self._p_cache.get(key)
        if cached is not None:
            session.p_star = cached
            session.p_progress = (1, 1)
            return

        def work():
            def on_progress(done, total):
                with session.lock:
                    session.p_progress = (done, total)

            try:
                p, _ = iterate_prediction(
                    session.config, session.profiles, session.predictor_params,
                    progress=on_progress,
                )
            except Exception as exc:  # pragma: no cover - defensive
                with session.lock:
                    session.p_error = str(exc)
                return
            with session.lock:
                session.p_star = p
                self._p_cache[key] = p

        if self._compute_async:
            threading.Thread(target=work, daemon=True).start()
        else:
            work()

    def create(
        self,
        config: AuctionConfig,
        profiles: Sequence[BidderProfile],
        advised: int,
        search_params: SearchParams,
        predictor_params: PredictorParams,
        seed: int = 0,
    ) -> Session:
        _validate_profiles(config, profiles)
        if not 0 <= advised < config.n_bidders:
            raise AdvisorError("VALIDATION", "advised bidder index out of range", 422)
        session = Session(
            session_id=uuid.uuid4().hex,
            config=config,
            profiles=list(profiles),
            advised=advised,
            search_params=search_params,
            predictor_params=predictor_params,
            seed=seed,
            state=AuctionState.initial(config),
        )
        self._sessions[session.session_id] = session
        self._start_prediction(session)
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise AdvisorError("NOT_FOUND", f"no session {session_id}", 404) from None

    def record_round(
        self,
        session: Session,
        round_index: int,
        bids: Sequence[Sequence[int]],
        observed_winners: dict[int, int],
    ) -> AuctionState:
        with session.lock:
            if session.state.terminal:
                raise AdvisorError("TERMINAL", "the auction has closed")
            if round_index != session.state.round:
                raise AdvisorError(
                    "VALIDATION",
                    f"expected round {session.state.round}, got {round_index}",
                    409,
                )
            try:
                new_state = apply_round_observed(
                    session.state,
                    [frozenset(b) for b in bids],
                    dict(observed_winners),
                    session.profiles,
                )
            except IllegalBidError as e:
                raise AdvisorError(e.code, str(e), 422) from None
            except Exception as e:
                raise AdvisorError("VALIDATION", str(e), 422) from None
            session.history.append(
                RecordedRound([sorted(b) for b in bids], dict(observed_winners))
            )
            session.state = new_state
            session.trace.append(
                RoundRecord(
                    round=new_state.round,
                    ticks=list(new_state.ticks),
                    winner=list(new_state.winner),
                    eligibility=list(new_state.eligibility),
                    bids=[sorted(b) for b in bids],
                )
            )
            session.recommendation = None
            return new_state

    def verify_replay(self, session: Session) -> bool:
        """Replay integrity: history must reproduce the cached state exactly."""
        replayed = _replay(session.config, session.profiles, session.history)
        return replayed == session.state

    def prediction_status(self, session: Session) -> dict:
        with session.lock:
            if session.p_error:
                return {"status": "error", "detail": session.p_error}
            if session.p_star is not None:
                return {"status": "ready"}
            done, total = session.p_progress
            return {"status": "computing", "done": done, "total": total}

    def recommend(self, session: Session) -> dict:
        """Run (or reuse) the search at the current state for the advised bidder."""
        with session.lock:
            if session.state.terminal:
                raise AdvisorError("TERMINAL", "the auction has closed")
            if session.p_star is None:
                done, total = session.p_progress
                raise AdvisorError(
                    "NOT_READY",
                    f"closing-price prediction still computing ({done}/{total})",
                )
            if session.recommendation is not None:
                return session.recommendation
            state = session.state
            p_star = session.p_star
        seed = SplitMix64(session.seed ^ (0x5EC0 + state.round)).next_u64()
        result: SearchResult = search(
            state, session.advised, session.profiles, p_star, session.search_params,
            seed=seed,
        )
        payload = {
            "action": sorted(result.best_action),
            "root_table": result.root_table,
            "iterations": result.iterations,
            "tree_size": result.tree_size,
            "elapsed_s": result.elapsed_s,
            "round": state.round,
        }
        with session.lock:
            if session.state.round == payload["round"]:
                session.recommendation = payload
        return payload

    def what_if(
        self,
        session: Session,
        items: Sequence[int],
        samples: int = 200,
        horizon: int | None = None,
    ) -> dict:
        """Distribution summary of forcing one bid now, then noisy PP futures.

        Read-only: every random draw is derived from (session seed, round,
        bid, sample index), so repeated calls return identical numbers and
        nothing in the session advances.
        """
        if samples < 1:
            raise AdvisorError("VALIDATION", "need at least one sample", 422)
        with session.lock:
            if session.state.terminal:
                raise AdvisorError("TERMINAL", "the auction has closed")
            if session.p_star is None:
                raise AdvisorError("NOT_READY", "closing-price prediction still computing")
            state = session.state
            p_star = session.p_star
        cfg = session.config
        advised = session.advised
        try:
            check_bid_legal(state, advised, session.profiles[advised], items)
        except IllegalBidError as e:
            raise AdvisorError(e.code, str(e), 422) from None

        kern = backend.get_kernels()
        values, budgets = pack_profiles(session.profiles, cfg.m_items)
        eps = cfg.epsilon
        max_rounds = (
            horizon if horizon is not None
            else termination_bound(session.profiles, eps) + 1
        )
        bid_key = mask_of(items, cfg.m_items)
        base = SplitMix64(session.seed ^ (state.round << 20) ^ bid_key).next_u64()

        utils = np.empty(samples, dtype=np.float64)
        closing = np.zeros(cfg.m_items, dtype=np.float64)
        for s in range(samples):
            rng = SplitMix64(base ^ (2 * s + 1))
            preds = np.empty((cfg.n_bidders, cfg.m_items))
            for i in range(cfg.n_bidders):
                for j in range(cfg.m_items):
                    u = (rng.next_u64() >> 11) * 2.0 ** -53
                    p = p_star[j] + (2.0 * u - 1.0) * eps
                    preds[i, j] = p if p > 0.0 else 0.0
            bids = []
            for i in range(cfg.n_bidders):
                if i == advised:
                    bids.append(frozenset(items))
                else:
                    bids.append(pp_bid(preds[i], state, i, session.profiles[i]))
            forced = apply_round(state, bids, rng)
            if forced.terminal:
                t = np.asarray(forced.ticks, dtype=np.int64)
                w = np.asarray(forced.winner, dtype=np.int64)
            else:
                t = np.asarray(forced.ticks, dtype=np.int64)
                w = np.asarray(forced.winner, dtype=np.int64)
                e = np.asarray(forced.eligibility, dtype=np.int64)
                rounds, st, ok = kern.playout_core(
                    values, budgets, preds, t, w, e, eps, max_rounds, np.uint64(rng.state)
                )
                if not ok and horizon is None:
                    raise RuntimeError("what-if playout exceeded the hard round bound")
            spend = 0.0
            value_mask = 0
            for j in range(cfg.m_items):
                if w[j] == advised:
                    value_mask |= 1 << j
                    spend += t[j] * eps
            utils[s] = values[advised, value_mask] - spend
            closing += t * eps
        return {
            "bid": sorted(items),
            "samples": samples,
            "utility_mean": float(np.mean(utils)),
            "utility_min": float(np.min(utils)),
            "utility_max": float(np.max(utils)),
            "exposure_frequency": float(np.mean(utils < 0)),
            "closing_price_means": (closing / samples).tolist(),
        }

    def edit_profiles(self, session: Session, profiles: Sequence[BidderProfile]):
        """Swap profile estimates; history must stay legal, prediction recomputes."""
        _validate_profiles(session.config, profiles)
        with session.lock:
            try:
                replayed = _replay(session.config, list(profiles), session.history)
            except IllegalBidError as e:
                raise AdvisorError(
                    e.code, f"recorded history illegal under new profiles: {e}", 422
                ) from None
            session.profiles = list(profiles)
            session.state = replayed
            session.p_star = None
            session.p_progress = (0, 0)
            session.recommendation = None
        self._start_prediction(session)

    def final_utilities(self, session: Session) -> list[float] | None:
        if not session.state.terminal:
            return None
        return list(outcome_of(session.state, session.profiles).utilities)

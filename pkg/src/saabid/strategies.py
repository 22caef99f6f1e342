"""Bidding strategies: point-price prediction, straightforward bidding,
a tatonnement price-equilibrium baseline, and the strategy registry.

A point-price-prediction (PP) bidder estimates closing prices from an
initial prediction and the current board, then raises on the bundle that
maximises predicted profit within budget and eligibility.  Straightforward
bidding (SB) is PP with an all-zero prediction.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ._bits import items_of
from .auction import (
    AuctionConfig,
    AuctionState,
    BidderProfile,
    Strategy,
    pack_profiles,
)
from .kernels_numpy import best_bundle


class StrategyNotFoundError(KeyError):
    def __init__(self, name: str):
        super().__init__(f"unknown strategy {name!r}; registered: "
                         f"{sorted(available_strategies())}")
        self.name = name


def rho(
    p_init: np.ndarray, ticks: Sequence[int], won: Sequence[int] | frozenset, epsilon: float
) -> np.ndarray:
    """Estimated closing prices given the current board.

    Already-won items cannot drop below their current price; everything else
    would cost at least the current price plus one increment.
    """
    p_init = np.asarray(p_init, dtype=np.float64)
    price = np.asarray(ticks, dtype=np.float64) * epsilon
    won_arr = np.zeros(p_init.size, dtype=bool)
    for j in won:
        won_arr[j] = True
    return np.where(won_arr, np.maximum(p_init, price), np.maximum(p_init, price + epsilon))


def pp_bid(
    p_init: np.ndarray, state: AuctionState, bidder: int, profile: BidderProfile
) -> frozenset:
    """The PP action: raise on the predicted-profit-maximising bundle.

    Ties break toward higher utility, then smaller bundles, then the
    lexicographically smallest item list; an empty set means pass.
    """
    if state.terminal:
        raise ValueError("pp_bid on a terminal state")
    eps = state.config.epsilon
    won = state.won_by(bidder)
    prices = rho(p_init, state.ticks, won, eps)
    values_row = np.asarray(profile.values.table, dtype=np.float64)
    mask = best_bundle(
        values_row, prices, state.won_mask(bidder), float(profile.budget),
        int(state.eligibility[bidder]),
    )
    return items_of(mask)


def sb_bid(state: AuctionState, bidder: int, profile: BidderProfile) -> frozenset:
    """Straightforward bidding: PP with a null price prediction."""
    return pp_bid(np.zeros(state.config.m_items), state, bidder, profile)


class PPStrategy:
    """Stateless PP bidder with a fixed initial prediction."""

    def __init__(self, p_init: np.ndarray):
        self.p_init = np.asarray(p_init, dtype=np.float64)

    def bid(self, state, bidder, profile, rng):
        return pp_bid(self.p_init, state, bidder, profile)


class SBStrategy(PPStrategy):
    def __init__(self, m_items: int):
        super().__init__(np.zeros(m_items))


class AlwaysPassStrategy:
    def bid(self, state, bidder, profile, rng):
        return frozenset()


def epe_prediction(
    profiles: Sequence[BidderProfile],
    config: AuctionConfig,
    kappa: float | None = None,
    iters: int = 200,
) -> np.ndarray:
    """Tatonnement price adjustment against unit supply.

    Each item's price moves by ``kappa * (demand - 1)`` and is projected at
    zero; demand counts the bidders whose budget-feasible best bundle at the
    current prices contains the item (full eligibility, nothing won yet).
    Known limitation, kept deliberately: the process ignores the bid
    increment, so the result is independent of the auction mechanism.
    """
    if kappa is None:
        kappa = config.epsilon / 2.0
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if iters < 1:
        raise ValueError("need at least one iteration")
    m = config.m_items
    values, budgets = pack_profiles(profiles, m)
    p = np.zeros(m, dtype=np.float64)
    for _ in range(iters):
        demand = np.zeros(m, dtype=np.float64)
        for i in range(len(profiles)):
            mask = best_bundle(values[i], p, 0, float(budgets[i]), m)
            for j in range(m):
                if mask >> j & 1:
                    demand[j] += 1.0
        p = np.maximum(0.0, p + kappa * (demand - 1.0))
    return p


class StrategyContext:
    """Per-instance shared inputs for strategy factories.

    Holds the (lazily computed, cached) fixed-point and tatonnement price
    predictions so that every bidder resolving "fixed-point" or "epe" shares
    the same vector, and precomputation can happen offline.
    """

    def __init__(
        self,
        config: AuctionConfig,
        profiles: Sequence[BidderProfile],
        p_star: np.ndarray | None = None,
        p_star_provider: Callable[[], np.ndarray] | None = None,
        epe_kappa: float | None = None,
        epe_iters: int = 200,
    ):
        self.config = config
        self.profiles = list(profiles)
        self._p_star = None if p_star is None else np.asarray(p_star, dtype=np.float64)
        self._p_star_provider = p_star_provider
        self._epe = None
        self.epe_kappa = epe_kappa
        self.epe_iters = epe_iters

    def p_star(self) -> np.ndarray:
        if self._p_star is None:
            if self._p_star_provider is not None:
                self._p_star = np.asarray(self._p_star_provider(), dtype=np.float64)
            else:
                from .prediction import PredictorParams, iterate_prediction

                p, _ = iterate_prediction(self.config, self.profiles, PredictorParams())
                self._p_star = p
        return self._p_star

    def epe(self) -> np.ndarray:
        if self._epe is None:
            self._epe = epe_prediction(
                self.profiles, self.config, kappa=self.epe_kappa, iters=self.epe_iters
            )
        return self._epe

    def resolve_prediction(self, source) -> np.ndarray:
        if isinstance(source, str):
            if source == "fixed-point":
                return self.p_star()
            if source == "epe":
                return self.epe()
            raise ValueError(f"unknown prediction source {source!r}")
        arr = np.asarray(source, dtype=np.float64)
        if arr.shape != (self.config.m_items,):
            raise ValueError("literal prediction must have one entry per item")
        if np.any(arr < 0):
            raise ValueError("predicted prices must be non-negative")
        return arr


_REGISTRY: dict[str, Callable[[StrategyContext, dict], Strategy]] = {}


def register_strategy(name: str, factory: Callable[[StrategyContext, dict], Strategy]):
    """Register a strategy factory under a unique name."""
    if name in _REGISTRY:
        raise ValueError(f"strategy {name!r} is already registered")
    _REGISTRY[name] = factory
    return name


def available_strategies() -> list[str]:
    return list(_REGISTRY)


def create_strategy(name: str, ctx: StrategyContext, params: dict | None = None) -> Strategy:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise StrategyNotFoundError(name) from None
    return factory(ctx, dict(params or {}))


def _make_sb(ctx: StrategyContext, params: dict) -> Strategy:
    return SBStrategy(ctx.config.m_items)


def _make_pp(ctx: StrategyContext, params: dict) -> Strategy:
    return PPStrategy(ctx.resolve_prediction(params.get("prediction", "fixed-point")))


def _make_epe(ctx: StrategyContext, params: dict) -> Strategy:
    return PPStrategy(ctx.epe())


def _make_sms(ctx: StrategyContext, params: dict) -> Strategy:
    from .search import SearchParams, SMSStrategy

    p_star = ctx.resolve_prediction(params.pop("prediction", "fixed-point"))
    return SMSStrategy(p_star, SearchParams(**params), ctx.profiles)


def _make_pass(ctx: StrategyContext, params: dict) -> Strategy:
    return AlwaysPassStrategy()


register_strategy("SB", _make_sb)
register_strategy("PP", _make_pp)
register_strategy("EPE", _make_epe)
register_strategy("SMS", _make_sms)
register_strategy("always-pass", _make_pass)

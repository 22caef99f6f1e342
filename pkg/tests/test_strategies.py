"""PP/SB bidding, the tatonnement baseline and the strategy registry."""

import numpy as np
import pytest

from saabid import (
    AuctionConfig,
    AuctionState,
    BidderProfile,
    exposure_instance,
    legal_bids,
    play_out,
    pp_bid,
    rho,
    sb_bid,
)
from saabid.strategies import (
    AlwaysPassStrategy,
    PPStrategy,
    SBStrategy,
    StrategyContext,
    StrategyNotFoundError,
    available_strategies,
    create_strategy,
    epe_prediction,
    register_strategy,
)
from saabid.valuations import ValueFunction

from helpers import additive_profile, oracle_pp_bid, random_instance, random_state


def mid_state(config, ticks, winner, elig):
    return AuctionState(
        config=config, round=max(ticks), ticks=tuple(ticks), winner=tuple(winner),
        eligibility=tuple(elig),
    )


class TestRho:
    def test_prediction_dominates(self):
        got = rho(np.array([10.0, 10.0]), (3, 4), frozenset([0]), 1.0)
        assert got.tolist() == [10.0, 10.0]

    def test_sb_branch(self):
        got = rho(np.array([0.0, 0.0]), (3, 4), frozenset(), 1.0)
        assert got.tolist() == [4.0, 5.0]

    def test_case_by_case(self):
        got = rho(np.array([10.0, 10.0]), (12, 9), frozenset([0]), 1.0)
        assert got.tolist() == [12.0, 10.0]


class TestPPBid:
    def test_canonical_round1(self):
        config, (p1, p2) = exposure_instance()
        state = AuctionState.initial(config)
        zero = np.zeros(2)
        assert pp_bid(zero, state, 0, p1) == frozenset([0])
        assert pp_bid(zero, state, 1, p2) == frozenset([0, 1])

    def test_canonical_dropout(self):
        config, (p1, p2) = exposure_instance()
        state = mid_state(config, [12, 11], [1, 1], [1, 2])
        assert pp_bid(np.zeros(2), state, 0, p1) == frozenset()

    def test_winning_everything_passes(self):
        config, (p1, p2) = exposure_instance()
        state = mid_state(config, [1, 1], [0, 0], [2, 2])
        assert pp_bid(np.zeros(2), state, 0, p1) == frozenset()

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(12)
        checked = 0
        while checked < 1000:
            config, profiles = random_instance(
                n=2, m=int(rng.integers(1, 5)), seed=int(rng.integers(1 << 30)),
                b_min=2.0, b_max=25.0,
            )
            state = random_state(config, profiles, rng)
            p_init = rng.uniform(0, 10, config.m_items)
            for i in range(config.n_bidders):
                got = pp_bid(p_init, state, i, profiles[i])
                want = oracle_pp_bid(p_init, state, i, profiles[i])
                assert got == want
                checked += 1

    def test_bid_always_legal(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            config, profiles = random_instance(
                n=2, m=int(rng.integers(1, 5)), seed=int(rng.integers(1 << 30)),
                b_min=0.0, b_max=20.0,
            )
            state = random_state(config, profiles, rng)
            p_init = rng.uniform(0, 10, config.m_items)
            for i in range(config.n_bidders):
                action = pp_bid(p_init, state, i, profiles[i])
                assert action in legal_bids(state, i, profiles[i])


class TestSBBid:
    def test_is_pp_with_zero_prediction(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            config, profiles = random_instance(m=3, seed=int(rng.integers(1 << 30)))
            state = random_state(config, profiles, rng)
            for i in range(config.n_bidders):
                assert sb_bid(state, i, profiles[i]) == pp_bid(
                    np.zeros(3), state, i, profiles[i]
                )

    def test_single_item_tie_prefers_pass(self):
        config = AuctionConfig(2, 1, 1.0)
        profile = BidderProfile(100.0, ValueFunction(1, np.array([0.0, 10.0])))
        state = mid_state(config, [9], [1], [1, 1])
        assert sb_bid(state, 0, profile) == frozenset()

    def test_single_item_profitable_raise(self):
        config = AuctionConfig(2, 1, 1.0)
        profile = BidderProfile(100.0, ValueFunction(1, np.array([0.0, 10.0])))
        state = mid_state(config, [8], [1], [1, 1])
        assert sb_bid(state, 0, profile) == frozenset([0])

    def test_pp_equals_sb_when_prices_exceed_prediction(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            config, profiles = random_instance(m=3, seed=int(rng.integers(1 << 30)))
            state = random_state(config, profiles, rng)
            if min(state.ticks) == 0:
                continue
            p_init = np.array([rng.uniform(0, t * config.epsilon) for t in state.ticks])
            for i in range(config.n_bidders):
                assert pp_bid(p_init, state, i, profiles[i]) == sb_bid(
                    state, i, profiles[i]
                )


class TestPredictionDominance:
    def test_realized_at_least_predicted(self):
        """Overestimating predictions with a realized exact win bounds utility."""
        config, profiles = exposure_instance()
        p_init = np.array([12.0, 12.0])

        class Recorder(PPStrategy):
            def __init__(self):
                super().__init__(p_init)
                self.last = None

            def bid(self, state, bidder, profile, rng):
                action = super().bid(state, bidder, profile, rng)
                prices = rho(self.p_init, state.ticks, state.won_by(bidder), 1.0)
                bundle = action | state.won_by(bidder)
                sigma = profile.values.value(bundle) - sum(prices[j] for j in bundle)
                self.last = (bundle, sigma)
                return action

        for seed in range(50):
            rec = Recorder()
            out = play_out(config, profiles, [rec, SBStrategy(2)], rng=seed)
            bundle, sigma = rec.last
            won = frozenset(
                j for j, w in enumerate(out.final_allocation) if w == 0
            )
            closing = out.closing_prices()
            if won == bundle and all(p_init[j] >= closing[j] for j in range(2)):
                assert out.utilities[0] >= sigma - 1e-9


class TestEPE:
    def test_single_bidder_no_excess_demand(self):
        config = AuctionConfig(2, 2, 1.0)
        rich = additive_profile(10.0, 2, budget=50.0)
        p = epe_prediction([rich], config, kappa=1.0, iters=50)
        assert p.tolist() == [0.0, 0.0]

    def test_two_bidders_one_item(self):
        config = AuctionConfig(2, 1, 1.0)
        a = BidderProfile(50.0, ValueFunction(1, np.array([0.0, 10.0])))
        b = BidderProfile(50.0, ValueFunction(1, np.array([0.0, 6.0])))
        p = epe_prediction([a, b], config, kappa=1.0, iters=100)
        assert 6.0 <= p[0] <= 7.0

    def test_symmetric_items_move_together(self):
        config = AuctionConfig(2, 2, 1.0)
        a = additive_profile(10.0, 2, budget=100.0)
        b = additive_profile(10.0, 2, budget=100.0)
        p = epe_prediction([a, b], config, kappa=1.0, iters=200)
        assert p[0] == p[1]
        assert p[0] <= 10.0

    def test_parameter_validation(self):
        config, profiles = exposure_instance()
        with pytest.raises(ValueError):
            epe_prediction(profiles, config, kappa=0.0)
        with pytest.raises(ValueError):
            epe_prediction(profiles, config, iters=0)


class TestRegistry:
    def test_builtins_present(self):
        names = available_strategies()
        for expected in ("SB", "PP", "EPE", "SMS", "always-pass"):
            assert expected in names
        assert names.count("SB") == 1

    def test_unknown_name(self):
        config, profiles = exposure_instance()
        ctx = StrategyContext(config, profiles)
        with pytest.raises(StrategyNotFoundError, match="nope"):
            create_strategy("nope", ctx)

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError, match="already registered"):
            register_strategy("SB", lambda ctx, params: AlwaysPassStrategy())

    def test_register_and_resolve(self):
        name = register_strategy("test-pass", lambda ctx, params: AlwaysPassStrategy())
        try:
            config, profiles = exposure_instance()
            ctx = StrategyContext(config, profiles)
            s = create_strategy(name, ctx)
            assert isinstance(s, AlwaysPassStrategy)
        finally:
            from saabid.strategies import _REGISTRY

            del _REGISTRY["test-pass"]

    def test_pp_prediction_sources(self):
        config, profiles = exposure_instance()
        ctx = StrategyContext(config, profiles, p_star=np.array([10.0, 10.0]))
        literal = create_strategy("PP", ctx, {"prediction": [3.0, 4.0]})
        assert literal.p_init.tolist() == [3.0, 4.0]
        fixed = create_strategy("PP", ctx, {"prediction": "fixed-point"})
        assert fixed.p_init.tolist() == [10.0, 10.0]
        epe = create_strategy("PP", ctx, {"prediction": "epe"})
        assert epe.p_init.shape == (2,)
        with pytest.raises(ValueError):
            create_strategy("PP", ctx, {"prediction": [1.0]})

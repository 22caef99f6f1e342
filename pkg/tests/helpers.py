"""Shared test helpers: independent brute-force oracles and scripted bidders.

The oracles here deliberately avoid the library's optimised kernels; they
re-derive legality and the bundle argmax from the rules directly so the two
routes can be compared.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from saabid import AuctionConfig, BidderProfile
from saabid.valuations import GeneratorParams, ValueFunction, generate_instance


def all_subsets(items):
    items = sorted(items)
    for k in range(len(items) + 1):
        yield from (frozenset(c) for c in combinations(items, k))


def oracle_legal_bids(state, bidder, profile):
    """Direct evaluation of the legality rule over every subset."""
    cfg = state.config
    eps = cfg.epsilon
    won = state.won_by(bidder)
    held = sum(state.ticks[j] * eps for j in won)
    out = []
    for X in all_subsets(set(range(cfg.m_items)) - won):
        if X:
            if len(X) + len(won) > state.eligibility[bidder]:
                continue
            if sum(state.ticks[j] * eps + eps for j in X) > profile.budget - held:
                continue
        out.append(X)
    return out


def tie_key(X):
    """Sort key implementing (smaller subset, lexicographic item list) order."""
    return (len(X), sorted(X))


def oracle_pp_bid(p_init, state, bidder, profile):
    """Definition-style PP argmax: exhaustive scan with explicit tie-breaks."""
    cfg = state.config
    eps = cfg.epsilon
    won = state.won_by(bidder)
    rho = {}
    for j in range(cfg.m_items):
        price = state.ticks[j] * eps
        rho[j] = max(p_init[j], price) if j in won else max(p_init[j], price + eps)
    best = None
    best_score = None
    for X in all_subsets(set(range(cfg.m_items)) - won):
        full = X | won
        cost = sum(rho[j] for j in full)
        if cost > profile.budget:
            continue
        if len(X) + len(won) > state.eligibility[bidder]:
            continue
        score = profile.values.value(full) - cost
        if best is None or score > best_score or (
            score == best_score and tie_key(X) < tie_key(best)
        ):
            best = X
            best_score = score
    return frozenset() if best is None else best


class CheapestSingleStrategy:
    """Bid on the cheapest affordable item while winning nothing, else pass.

    The optimal opponent of the demand-reduction experiment.
    """

    def bid(self, state, bidder, profile, rng):
        if state.won_by(bidder):
            return frozenset()
        if state.eligibility[bidder] < 1:
            return frozenset()
        eps = state.config.epsilon
        order = sorted(range(state.config.m_items), key=lambda j: (state.ticks[j], j))
        j = order[0]
        if state.ticks[j] * eps + eps <= profile.budget:
            return frozenset([j])
        return frozenset()


class RandomLegalStrategy:
    """Uniform draw over the legal bid sets; exercises the full rule space."""

    def bid(self, state, bidder, profile, rng):
        from saabid import legal_bids

        options = legal_bids(state, bidder, profile)
        return options[rng.randint(len(options))]


def random_instance(n=2, m=3, v_cap=5.0, b_min=10.0, b_max=40.0, eps=1.0, seed=0):
    config = AuctionConfig(n_bidders=n, m_items=m, epsilon=eps, rng_seed=seed)
    rng = np.random.default_rng(seed)
    profiles = generate_instance(config, GeneratorParams(v_cap, b_min, b_max), rng)
    return config, profiles


def additive_profile(per_item: float, m: int, budget: float) -> BidderProfile:
    table = np.zeros(1 << m)
    for mask in range(1 << m):
        table[mask] = per_item * bin(mask).count("1")
    return BidderProfile(budget=budget, values=ValueFunction(m, table))


def random_state(config, profiles, rng_np, max_ticks=6):
    """A syntactically valid mid-auction state with random board features."""
    from saabid.auction import AuctionState

    n, m = config.n_bidders, config.m_items
    ticks = []
    winner = []
    for j in range(m):
        t = int(rng_np.integers(0, max_ticks + 1))
        if t == 0:
            ticks.append(0)
            winner.append(-1)
        else:
            ticks.append(t)
            winner.append(int(rng_np.integers(0, n)))
    elig = []
    for i in range(n):
        held = sum(1 for w in winner if w == i)
        elig.append(int(rng_np.integers(held, m + 1)))
    return AuctionState(
        config=config,
        round=int(max(ticks)),
        ticks=tuple(ticks),
        winner=tuple(winner),
        eligibility=tuple(elig),
    )

"""Simultaneous ascending auction state machine.

Rules of the game: ``m`` items sold in concurrent English auctions between
``n`` bidders.  Each round all bidders submit a set of items simultaneously;
every bid is at the current price plus the fixed increment ``epsilon``.
Ties for an item are broken uniformly at random.  An activity rule caps
(items temporarily won + new bids) by a never-increasing eligibility, and
the auction closes on the first round with no new bid.

Prices are stored as integer ticks (price = ticks * epsilon) so states are
exact and hashable; budgets and valuations are plain money floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Protocol, Sequence

import numpy as np

from ._bits import SplitMix64, items_of, mask_of, popcounts, subset_sums

if TYPE_CHECKING:  # pragma: no cover
    from .valuations import ValueFunction

AUCTIONEER = -1

#: Largest item count for which exhaustive bundle enumeration is supported.
MAX_ITEMS = 20

BidAction = frozenset  # a set of item indices raised this round


class AuctionError(Exception):
    """Base class for auction rule violations."""


class IllegalBidError(AuctionError):
    """A submitted bid violates the legality rule.

    ``code`` is one of BUDGET, ELIGIBILITY, ALREADY_WINNING, TERMINAL and is
    reused verbatim by the advisor service error payloads.
    """

    def __init__(self, bidder: int, code: str, message: str):
        super().__init__(f"bidder {bidder}: {code}: {message}")
        self.bidder = bidder
        self.code = code


@dataclass(frozen=True)
class AuctionConfig:
    n_bidders: int
    m_items: int
    epsilon: float
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_bidders < 2:
            raise ValueError("an auction needs at least 2 bidders")
        if self.m_items < 1:
            raise ValueError("an auction needs at least 1 item")
        if not self.epsilon > 0:
            raise ValueError("the bid increment must be positive")


@dataclass(frozen=True)
class BidderProfile:
    budget: float
    values: "ValueFunction"

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be non-negative")


@dataclass(frozen=True)
class AuctionState:
    """Public state between rounds.

    ``ticks[j]`` is the bid price of item ``j`` in increments; ``winner[j]``
    the temporary winner (AUCTIONEER when never bid on); ``eligibility[i]``
    the activity cap revealed at the end of the last round.
    """

    config: AuctionConfig
    round: int
    ticks: tuple[int, ...]
    winner: tuple[int, ...]
    eligibility: tuple[int, ...]
    terminal: bool = False

    @classmethod
    def initial(cls, config: AuctionConfig) -> "AuctionState":
        m, n = config.m_items, config.n_bidders
        return cls(
            config=config,
            round=0,
            ticks=(0,) * m,
            winner=(AUCTIONEER,) * m,
            eligibility=(m,) * n,
        )

    def prices(self) -> np.ndarray:
        """Money prices, ticks * epsilon."""
        return np.asarray(self.ticks, dtype=np.float64) * self.config.epsilon

    def won_by(self, bidder: int) -> frozenset:
        return frozenset(j for j, w in enumerate(self.winner) if w == bidder)

    def won_mask(self, bidder: int) -> int:
        mask = 0
        for j, w in enumerate(self.winner):
            if w == bidder:
                mask |= 1 << j
        return mask


@dataclass(frozen=True)
class Outcome:
    closing_ticks: tuple[int, ...]
    final_allocation: tuple[int, ...]
    utilities: tuple[float, ...]
    rounds_played: int
    epsilon: float

    def closing_prices(self) -> np.ndarray:
        return np.asarray(self.closing_ticks, dtype=np.float64) * self.epsilon


class Strategy(Protocol):
    """Behavioural interface of a bidder; must return a legal action."""

    def bid(
        self, state: AuctionState, bidder: int, profile: BidderProfile, rng: SplitMix64
    ) -> frozenset: ...


def pack_profiles(profiles: Sequence[BidderProfile], m: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack value tables and budgets into the arrays the kernels consume."""
    values = np.stack([np.asarray(p.values.table, dtype=np.float64) for p in profiles])
    budgets = np.array([p.budget for p in profiles], dtype=np.float64)
    if values.shape != (len(profiles), 1 << m):
        raise ValueError("profile value tables do not match the item count")
    return values, budgets


def check_bid_legal(
    state: AuctionState, bidder: int, profile: BidderProfile, items: Iterable[int]
) -> None:
    """Raise IllegalBidError naming the violated constraint, or return None."""
    if state.terminal:
        raise IllegalBidError(bidder, "TERMINAL", "the auction has closed")
    cfg = state.config
    if not 0 <= bidder < cfg.n_bidders:
        raise ValueError(f"bidder index {bidder} out of range")
    items = frozenset(items)
    for j in items:
        if not 0 <= j < cfg.m_items:
            raise IllegalBidError(bidder, "ELIGIBILITY", f"item {j} does not exist")
    won = state.won_by(bidder)
    overlap = items & won
    if overlap:
        raise IllegalBidError(
            bidder, "ALREADY_WINNING",
            f"cannot bid on temporarily won items {sorted(overlap)}",
        )
    if len(items) + len(won) > state.eligibility[bidder]:
        raise IllegalBidError(
            bidder, "ELIGIBILITY",
            f"|new bids| + |won| = {len(items) + len(won)} exceeds eligibility "
            f"{state.eligibility[bidder]}",
        )
    if not items:
        return  # passing is always allowed
    eps = cfg.epsilon
    raise_cost = sum(state.ticks[j] * eps + eps for j in items)
    held_cost = sum(state.ticks[j] * eps for j in won)
    if raise_cost > profile.budget - held_cost:
        raise IllegalBidError(
            bidder, "BUDGET",
            f"raise cost {raise_cost:g} exceeds remaining budget "
            f"{profile.budget - held_cost:g}",
        )


def is_bid_legal(
    state: AuctionState, bidder: int, profile: BidderProfile, items: Iterable[int]
) -> bool:
    try:
        check_bid_legal(state, bidder, profile, items)
    except IllegalBidError:
        return False
    return True


def legal_bids(state: AuctionState, bidder: int, profile: BidderProfile) -> list[frozenset]:
    """All legal new-bid sets for a bidder, the empty set always included.

    Exhaustive over the ``2**m`` subsets; rejected for m > MAX_ITEMS.
    Ordered by (size, lexicographic item list).
    """
    if state.terminal:
        raise AuctionError("legal_bids on a terminal state")
    cfg = state.config
    if cfg.m_items > MAX_ITEMS:
        raise AuctionError(f"exhaustive bid enumeration supports at most {MAX_ITEMS} items")
    m = cfg.m_items
    eps = cfg.epsilon
    pop = popcounts(m)
    masks = np.arange(1 << m, dtype=np.int64)
    won_mask = state.won_mask(bidder)
    raise_costs = subset_sums(np.asarray(state.ticks, dtype=np.float64) * eps + eps)
    held = sum(state.ticks[j] * eps for j in state.won_by(bidder))
    feasible = (
        ((masks & won_mask) == 0)
        & (pop + int(pop[won_mask]) <= state.eligibility[bidder])
        & (raise_costs <= profile.budget - held)
    )
    feasible[0] = True  # passing is always allowed
    from ._bits import tie_order

    order = tie_order(m)
    return [items_of(int(mk)) for mk in order[feasible[order]]]


def apply_round(
    state: AuctionState,
    joint_bids: Sequence[Iterable[int]],
    rng: SplitMix64,
    profiles: Sequence[BidderProfile] | None = None,
) -> AuctionState:
    """Resolve one simultaneous round; ties drawn uniformly from ``rng``.

    When ``profiles`` is given every bid is validated first and an
    IllegalBidError identifies the offending bidder and constraint.
    """
    if state.terminal:
        raise AuctionError("apply_round on a terminal state")
    cfg = state.config
    if len(joint_bids) != cfg.n_bidders:
        raise ValueError("need one bid set per bidder")
    bids = [frozenset(b) for b in joint_bids]
    if profiles is not None:
        for i, b in enumerate(bids):
            check_bid_legal(state, i, profiles[i], b)
    return _resolve(state, bids, tie_pick=lambda cands: cands[rng.randint(len(cands))])


def apply_round_observed(
    state: AuctionState,
    joint_bids: Sequence[Iterable[int]],
    observed_winners: dict[int, int],
    profiles: Sequence[BidderProfile] | None = None,
) -> AuctionState:
    """Resolve a round whose tie outcomes were observed rather than drawn.

    Used when replaying a real auction: every tied item must appear in
    ``observed_winners``; claims for unbid items or non-bidders are rejected.
    """
    if state.terminal:
        raise AuctionError("apply_round on a terminal state")
    bids = [frozenset(b) for b in joint_bids]
    if profiles is not None:
        for i, b in enumerate(bids):
            check_bid_legal(state, i, profiles[i], b)
    bid_on = set()
    for b in bids:
        bid_on |= b
    for j, w in observed_winners.items():
        if j not in bid_on:
            raise AuctionError(f"observed winner for item {j}, which received no bid")
        if w not in [i for i, b in enumerate(bids) if j in b]:
            raise AuctionError(f"bidder {w} did not bid on item {j}")

    def resolve_tie(item: int, cands: list[int]) -> int:
        if item not in observed_winners:
            raise AuctionError(f"item {item} is tied; an observed winner is required")
        return observed_winners[item]

    return _resolve(state, bids, tie_pick=None, resolve_tie=resolve_tie)


def _resolve(state, bids, tie_pick, resolve_tie=None):
    cfg = state.config
    n, m = cfg.n_bidders, cfg.m_items
    any_bid = any(bids)
    if not any_bid:
        return AuctionState(
            config=cfg,
            round=state.round + 1,
            ticks=state.ticks,
            winner=state.winner,
            eligibility=state.eligibility,
            terminal=True,
        )
    new_elig = tuple(
        len(state.won_by(i)) + len(bids[i]) for i in range(n)
    )
    ticks = list(state.ticks)
    winner = list(state.winner)
    for j in range(m):
        cands = [i for i in range(n) if j in bids[i]]
        if not cands:
            continue
        ticks[j] += 1
        if len(cands) == 1:
            winner[j] = cands[0]
        elif resolve_tie is not None:
            winner[j] = resolve_tie(j, cands)
        else:
            winner[j] = tie_pick(cands)
    return AuctionState(
        config=cfg,
        round=state.round + 1,
        ticks=tuple(ticks),
        winner=tuple(winner),
        eligibility=new_elig,
        terminal=False,
    )


def utility(
    values: "ValueFunction", won: Iterable[int] | int, closing_ticks: Sequence[int], epsilon: float
) -> float:
    """Profit: value of the won bundle minus the sum of its closing prices."""
    mask = won if isinstance(won, int) else mask_of(won, values.m_items)
    spend = 0.0
    j = 0
    rest = mask
    while rest:
        if rest & 1:
            spend += closing_ticks[j] * epsilon
        rest >>= 1
        j += 1
    return float(values.table[mask]) - spend


def risk_averse_utility(u: float, alpha: float) -> float:
    """Utility with losses scaled by (1 + alpha); alpha >= 0."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return (1.0 + alpha) * u if u < 0 else u


def termination_bound(profiles: Sequence[BidderProfile], epsilon: float) -> int:
    """Hard upper bound on rounds: total committed spend rises every round."""
    return int(sum(int(p.budget // epsilon) for p in profiles)) + 1


def outcome_of(state: AuctionState, profiles: Sequence[BidderProfile]) -> Outcome:
    cfg = state.config
    utils = tuple(
        utility(profiles[i].values, state.won_mask(i), state.ticks, cfg.epsilon)
        for i in range(cfg.n_bidders)
    )
    # Budget safety invariant: nobody ever owes more than their budget.
    for i in range(cfg.n_bidders):
        spend = sum(state.ticks[j] * cfg.epsilon for j in state.won_by(i))
        if spend > profiles[i].budget + 1e-9:
            raise AuctionError(f"bidder {i} spend {spend} exceeds budget {profiles[i].budget}")
    return Outcome(
        closing_ticks=state.ticks,
        final_allocation=state.winner,
        utilities=utils,
        rounds_played=state.round,
        epsilon=cfg.epsilon,
    )


@dataclass
class RoundRecord:
    """One line of the serialisable auction trace."""

    round: int
    ticks: list[int]
    winner: list[int]
    eligibility: list[int]
    bids: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "ticks": self.ticks,
            "winner": self.winner,
            "eligibility": self.eligibility,
            "bids": self.bids,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        return cls(d["round"], d["ticks"], d["winner"], d["eligibility"], d["bids"])


def play_out(
    config: AuctionConfig,
    profiles: Sequence[BidderProfile],
    strategies: Sequence[Strategy],
    rng: SplitMix64 | int,
    trace: list[RoundRecord] | None = None,
    max_rounds: int | None = None,
) -> Outcome:
    """Run a full auction; deterministic given the seed and the strategies.

    A strategy returning an illegal bid aborts the auction with a diagnostic
    (strategies are required to self-constrain).
    """
    if len(strategies) != config.n_bidders or len(profiles) != config.n_bidders:
        raise ValueError("need one profile and one strategy per bidder")
    if isinstance(rng, int):
        rng = SplitMix64(rng)
    state = AuctionState.initial(config)
    bound = max_rounds if max_rounds is not None else termination_bound(profiles, config.epsilon)
    while not state.terminal:
        if state.round >= bound:
            raise AuctionError(f"auction exceeded the hard round bound {bound}")
        bids = []
        for i in range(config.n_bidders):
            action = frozenset(strategies[i].bid(state, i, profiles[i], rng))
            check_bid_legal(state, i, profiles[i], action)
            bids.append(action)
        new_state = apply_round(state, bids, rng)
        if trace is not None:
            trace.append(
                RoundRecord(
                    round=new_state.round,
                    ticks=list(new_state.ticks),
                    winner=list(new_state.winner),
                    eligibility=list(new_state.eligibility),
                    bids=[sorted(b) for b in bids],
                )
            )
        state = new_state
    return outcome_of(state, profiles)

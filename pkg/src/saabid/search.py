"""Simultaneous-move Monte Carlo tree search bidder with risk-averse rewards.

Each search iteration selects one joint action per tree level (decoupled
per-player UCT over risk-averse returns), resolves the round with explicit
seeded tie draws, expands at most ``n_act`` promising actions per player at
new nodes, evaluates by a noisy all-PP playout, and backpropagates the
risk-averse utilities.  A perfect transposition table keyed by
(prices + allocation, eligibility vector) merges transposed states.

Two execution paths produce identical results: a pure-python driver (the
reference, also used for wall-clock budgets and oversized instances) and a
fused numba kernel used whenever the backend allows.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import backend
from ._bits import SplitMix64, items_of, tie_order
from .auction import (
    AuctionConfig,
    AuctionState,
    BidderProfile,
    check_bid_legal,
    pack_profiles,
    termination_bound,
)
from .kernels_numpy import NEG_INF, bundle_scores, utilities as _np_utilities

#: Memory guard for the fused kernel's preallocated node pool.
MAX_TREE_NODES = 150_000


class DepthBoundExceeded(RuntimeError):
    """A state hash was requested beyond the bounded search depth."""


@dataclass(frozen=True)
class SearchParams:
    alpha: float = 7.0
    n_act: int = 20
    r_max: int = 10
    iterations: int | None = 1000
    time_budget_s: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.n_act < 1:
            raise ValueError("n_act must be at least 1 (pass is always kept)")
        if self.r_max < 1:
            raise ValueError("r_max must be at least 1")
        if self.iterations is None and self.time_budget_s is None:
            raise ValueError("need an iteration or time budget")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be non-negative")


@dataclass
class ActionStats:
    """Selection statistics of one action at one node for one player."""

    r_alpha: float = 0.0
    n: int = 0
    a_alpha: float = math.inf
    c_alpha: float = -math.inf

    def mean(self) -> float:
        return self.r_alpha / self.n

    def consistent(self) -> bool:
        if self.n == 0:
            return self.a_alpha == math.inf and self.c_alpha == -math.inf
        return self.a_alpha <= self.r_alpha / self.n <= self.c_alpha


def hash_prices_allocation(
    root_ticks: Sequence[int],
    ticks: Sequence[int],
    winner: Sequence[int],
    n_bidders: int,
    r_max: int,
) -> int:
    """Exact integer hash of (price deltas, allocation) relative to the root.

    Arbitrary precision: never wraps.  Raises DepthBoundExceeded when an
    item has risen by r_max or more ticks since the root.
    """
    step = r_max * n_bidders
    h = 0
    w = 1
    for j, (t0, t, a) in enumerate(zip(root_ticks, ticks, winner)):
        dt = t - t0
        if dt < 0:
            raise ValueError(f"item {j} is below its root price")
        if dt >= r_max:
            raise DepthBoundExceeded(
                f"item {j} rose {dt} ticks since the root; the hash is only "
                f"injective below r_max={r_max}"
            )
        if a >= 0:
            h += (r_max * a + dt) * w
        w *= step
    return h


def hash_eligibility(eligibility: Sequence[int], m: int) -> int:
    """Mixed-radix encoding, injective over eligibility vectors in [0, m]^n."""
    h = 0
    base = 1
    for e in eligibility:
        if not 0 <= e <= m:
            raise ValueError("eligibility entries must lie in [0, m]")
        h += e * base
        base *= m + 1
    return h


def node_key(root_ticks, ticks, winner, eligibility, n_bidders, m, r_max) -> tuple[int, int]:
    return (
        hash_prices_allocation(root_ticks, ticks, winner, n_bidders, r_max),
        hash_eligibility(eligibility, m),
    )


@dataclass
class _GameData:
    n: int
    m: int
    eps: float
    values: np.ndarray
    budgets: np.ndarray
    max_rounds: int


def _pack(config: AuctionConfig, profiles: Sequence[BidderProfile]) -> _GameData:
    values, budgets = pack_profiles(profiles, config.m_items)
    return _GameData(
        n=config.n_bidders,
        m=config.m_items,
        eps=config.epsilon,
        values=values,
        budgets=budgets,
        max_rounds=termination_bound(profiles, config.epsilon) + 1,
    )


class _Node:
    __slots__ = ("ticks", "winner", "elig", "masks", "r", "a", "c", "vis", "tot", "children")

    def __init__(self, ticks, winner, elig, masks):
        self.ticks = ticks
        self.winner = winner
        self.elig = elig
        self.masks = masks  # one int64 array of candidate new-bid masks per player
        self.r = [np.zeros(mk.size) for mk in masks]
        self.a = [np.full(mk.size, math.inf) for mk in masks]
        self.c = [np.full(mk.size, -math.inf) for mk in masks]
        self.vis = [np.zeros(mk.size, dtype=np.int64) for mk in masks]
        self.tot = [0] * len(masks)
        self.children: dict = {}


def expand(
    ticks: np.ndarray,
    winner: np.ndarray,
    elig: np.ndarray,
    p_star: np.ndarray,
    data: _GameData,
    n_act: int,
) -> _Node:
    """Build a tree node: per player, pass plus the top predicted bids.

    Candidates are filtered by predicted budget and eligibility and ranked
    by predicted utility (the risk transform is monotone, so the ranking is
    unaffected by alpha) with the standard tie-break order.
    """
    order = tie_order(data.m)
    masks = []
    for i in range(data.n):
        won_mask = 0
        for j in range(data.m):
            if winner[j] == i:
                won_mask |= 1 << j
        price = ticks * data.eps
        prices = np.where(
            winner == i, np.maximum(p_star, price), np.maximum(p_star, price + data.eps)
        )
        scores = bundle_scores(
            data.values[i], prices, won_mask, float(data.budgets[i]), int(elig[i])
        )
        ordered = scores[order]
        rank = np.argsort(-ordered, kind="stable")
        picks = [0]
        for ri in rank:
            if len(picks) >= n_act:
                break
            mask = int(order[ri])
            if mask == 0 or ordered[ri] == NEG_INF:
                continue
            picks.append(mask)
        masks.append(np.array(picks, dtype=np.int64))
    return _Node(ticks.copy(), winner.copy(), elig.copy(), masks)


def uct_score(r_alpha: float, n: int, a_alpha: float, c_alpha: float,
              total: int, epsilon: float) -> float:
    """Selection index: mean risk-averse return plus an exploration bonus

    scaled by the observed return support, clamped below at the increment.
    """
    width = c_alpha - a_alpha
    if width < epsilon:
        width = epsilon
    log_term = 2.0 * math.log(total)
    return r_alpha / n + width * math.sqrt(log_term / n)


def select_action(node: _Node, player: int, epsilon: float) -> int:
    """Decoupled UCT pick: unvisited first (expansion rank), then the index
    with the best selection score, ties toward the lower index."""
    vis = node.vis[player]
    for a in range(vis.size):
        if vis[a] == 0:
            return a
    tot = node.tot[player]
    best = -1
    best_q = -math.inf
    r = node.r[player]
    lo = node.a[player]
    hi = node.c[player]
    for a in range(vis.size):
        q = uct_score(r[a], int(vis[a]), lo[a], hi[a], tot, epsilon)
        if q > best_q:
            best_q = q
            best = a
    return best


def backpropagate(path: list[tuple[_Node, tuple[int, ...]]], rewards: np.ndarray) -> None:
    """Add the risk-averse returns to every (node, chosen action) on the path."""
    for node, actions in path:
        for i, a in enumerate(actions):
            node.r[i][a] += rewards[i]
            node.vis[i][a] += 1
            node.tot[i] += 1
            if rewards[i] < node.a[i][a]:
                node.a[i][a] = rewards[i]
            if rewards[i] > node.c[i][a]:
                node.c[i][a] = rewards[i]


def _rollout_raw(
    ticks: np.ndarray,
    winner: np.ndarray,
    elig: np.ndarray,
    p_star: np.ndarray,
    data: _GameData,
    rng: SplitMix64,
    kern,
) -> np.ndarray:
    """Noisy all-PP playout to termination; returns raw final utilities."""
    preds = np.empty((data.n, data.m), dtype=np.float64)
    for i in range(data.n):
        for j in range(data.m):
            u = (rng.next_u64() >> 11) * 2.0 ** -53
            p = p_star[j] + (2.0 * u - 1.0) * data.eps
            preds[i, j] = p if p > 0.0 else 0.0
    t = ticks.copy()
    w = winner.copy()
    e = elig.copy()
    rounds, state, ok = kern.playout_core(
        data.values, data.budgets, preds, t, w, e, data.eps, data.max_rounds,
        np.uint64(rng.state),
    )
    if not ok:
        raise RuntimeError("rollout exceeded the hard round bound")
    rng.state = int(state) & ((1 << 64) - 1)
    return _np_utilities(data.values, t, w, data.eps)


def rollout(
    state: AuctionState,
    p_star: np.ndarray,
    profiles: Sequence[BidderProfile],
    alphas: Sequence[float],
    epsilon: float,
    rng: SplitMix64,
) -> np.ndarray:
    """Per-player risk-averse utility of one noisy all-PP continuation.

    A terminal state yields its final payoffs directly, no rounds simulated.
    """
    cfg = state.config
    data = _pack(cfg, profiles)
    if state.terminal:
        raw = _np_utilities(
            data.values,
            np.asarray(state.ticks, dtype=np.int64),
            np.asarray(state.winner, dtype=np.int64),
            data.eps,
        )
        out = raw.copy()
        for i, alpha in enumerate(alphas):
            if out[i] < 0:
                out[i] = (1.0 + alpha) * out[i]
        return out
    kern = backend.get_kernels()
    raw = _rollout_raw(
        np.asarray(state.ticks, dtype=np.int64),
        np.asarray(state.winner, dtype=np.int64),
        np.asarray(state.eligibility, dtype=np.int64),
        np.asarray(p_star, dtype=np.float64),
        data,
        rng,
        kern,
    )
    out = raw.copy()
    for i, alpha in enumerate(alphas):
        if out[i] < 0:
            out[i] = (1.0 + alpha) * out[i]
    return out


@dataclass
class SearchResult:
    player: int
    best_action: frozenset
    root_table: list[dict]
    iterations: int
    tree_size: int
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "best_action": sorted(self.best_action),
            "root_table": self.root_table,
            "iterations": self.iterations,
            "tree_size": self.tree_size,
            "elapsed_s": self.elapsed_s,
        }


def _fused_possible(data: _GameData, params: SearchParams) -> bool:
    if not backend.use_fused_search():
        return False
    if params.iterations is None or params.time_budget_s is not None:
        return False  # wall-clock budgets run on the python driver
    step = params.r_max * data.n
    return step ** data.m < 2 ** 62


def _root_table(masks, r, vis, a, c) -> list[dict]:
    rows = []
    for idx in range(masks.size):
        mask = int(masks[idx])
        if mask < 0:
            break
        row = {
            "action": sorted(items_of(mask)),
            "n": int(vis[idx]),
            "r_alpha": float(r[idx]),
            "mean": float(r[idx] / vis[idx]) if vis[idx] else None,
            "a_alpha": float(a[idx]) if vis[idx] else None,
            "c_alpha": float(c[idx]) if vis[idx] else None,
        }
        rows.append(row)
    return rows


def _final_move(masks: np.ndarray, r: np.ndarray, vis: np.ndarray) -> int:
    best = -1
    best_mean = -math.inf
    for idx in range(masks.size):
        if masks[idx] < 0 or vis[idx] == 0:
            continue
        mean = r[idx] / vis[idx]
        if mean > best_mean:
            best_mean = mean
            best = idx
    if best < 0:
        return 0
    return int(masks[best])


def search(
    state: AuctionState,
    player: int,
    profiles: Sequence[BidderProfile],
    p_star: np.ndarray,
    params: SearchParams,
    seed: int | None = None,
) -> SearchResult:
    """Run the tree search from ``state`` and report the root action table.

    The final move maximises the mean risk-averse return at the root, ties
    toward the smaller action index; with no completed iterations the safe
    pass is returned.
    """
    if state.terminal:
        raise ValueError("cannot search from a terminal state")
    cfg = state.config
    data = _pack(cfg, profiles)
    p_star = np.asarray(p_star, dtype=np.float64)
    seed = params.rng_seed if seed is None else seed
    start = time.perf_counter()

    if _fused_possible(data, params):
        kern = backend.get_kernels("numba")
        max_nodes = min(params.iterations + 1, MAX_TREE_NODES)
        out = kern.search_run(
            data.values, data.budgets, p_star,
            np.asarray(state.ticks, dtype=np.int64),
            np.asarray(state.winner, dtype=np.int64),
            np.asarray(state.eligibility, dtype=np.int64),
            data.eps, params.alpha, params.n_act, params.r_max,
            params.iterations, np.uint64(seed), data.max_rounds, max_nodes,
        )
        masks, r, vis, a, c, cnt, iters, nodes, ok = out
        if not ok:
            raise RuntimeError("search playout exceeded the hard round bound")
        best_mask = _final_move(masks[player], r[player], vis[player])
        result = SearchResult(
            player=player,
            best_action=items_of(best_mask),
            root_table=_root_table(masks[player], r[player], vis[player], a[player], c[player]),
            iterations=int(iters),
            tree_size=int(nodes),
            elapsed_s=time.perf_counter() - start,
        )
    else:
        result = _search_python(state, player, data, p_star, params, seed, start)

    check_bid_legal(state, player, profiles[player], result.best_action)
    return result


def _search_python(state, player, data, p_star, params, seed, start, debug=None) -> SearchResult:
    kern = backend.get_kernels()
    rng = SplitMix64(seed)
    n, m = data.n, data.m
    root_ticks = np.asarray(state.ticks, dtype=np.int64)
    root = expand(
        root_ticks,
        np.asarray(state.winner, dtype=np.int64),
        np.asarray(state.eligibility, dtype=np.int64),
        p_star, data, params.n_act,
    )
    table: dict[tuple[int, int], _Node] = {
        node_key(root_ticks, root.ticks, root.winner, root.elig, n, m, params.r_max): root
    }

    deadline = None if params.time_budget_s is None else start + params.time_budget_s
    iters = 0
    while True:
        if params.iterations is not None and iters >= params.iterations:
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break
        iters += 1
        node = root
        depth = 0
        path: list[tuple[_Node, tuple[int, ...]]] = []
        while True:
            actions = tuple(select_action(node, i, data.eps) for i in range(n))
            bids = [int(node.masks[i][actions[i]]) for i in range(n)]
            path.append((node, actions))
            if not any(bids):
                rewards = _np_utilities(data.values, node.ticks, node.winner, data.eps)
                node.children[(actions, ())] = "terminal"
                break
            child_ticks = node.ticks.copy()
            child_winner = node.winner.copy()
            child_elig = np.empty(n, dtype=np.int64)
            for i in range(n):
                won = int(np.sum((node.winner == i).astype(np.int64)))
                child_elig[i] = won + bin(bids[i]).count("1")
            outcome = []
            for j in range(m):
                bit = 1 << j
                cands = [i for i in range(n) if bids[i] & bit]
                if not cands:
                    continue
                child_ticks[j] += 1
                if len(cands) == 1:
                    child_winner[j] = cands[0]
                else:
                    pick = rng.randint(len(cands))
                    child_winner[j] = cands[pick]
                    outcome.append((j, cands[pick]))
            depth += 1
            if depth >= params.r_max:
                rewards = _rollout_raw(
                    child_ticks, child_winner, child_elig, p_star, data, rng, kern
                )
                break
            key = node_key(
                root_ticks, child_ticks, child_winner, child_elig, n, m, params.r_max
            )
            node.children[(actions, tuple(outcome))] = key
            existing = table.get(key)
            if existing is not None:
                node = existing
                continue
            child = expand(child_ticks, child_winner, child_elig, p_star, data, params.n_act)
            table[key] = child
            rewards = _rollout_raw(
                child_ticks, child_winner, child_elig, p_star, data, rng, kern
            )
            break
        rewards = rewards.copy()
        for i in range(n):
            if rewards[i] < 0.0:
                rewards[i] = (1.0 + params.alpha) * rewards[i]
        backpropagate(path, rewards)

    if debug is not None:
        debug["table"] = table
        debug["root"] = root
    masks = root.masks[player]
    best_mask = _final_move(masks, root.r[player], root.vis[player])
    return SearchResult(
        player=player,
        best_action=items_of(best_mask),
        root_table=_root_table(
            masks, root.r[player], root.vis[player], root.a[player], root.c[player]
        ),
        iterations=iters,
        tree_size=len(table),
        elapsed_s=time.perf_counter() - start,
    )


def sms_alpha_bid(
    state: AuctionState,
    player: int,
    profiles: Sequence[BidderProfile],
    p_star: np.ndarray,
    params: SearchParams,
    seed: int | None = None,
) -> frozenset:
    """The search bidder's move at ``state`` (pass when nothing was explored)."""
    return search(state, player, profiles, p_star, params, seed).best_action


class SMSStrategy:
    """Search bidder as a reusable strategy.

    Complete information: the strategy holds every bidder's profile, and the
    closing-price prediction is computed offline and passed in.  Each call
    derives a fresh search seed from the auction's random stream.
    """

    def __init__(
        self,
        p_star: np.ndarray,
        params: SearchParams,
        profiles: Sequence[BidderProfile],
    ):
        self.p_star = np.asarray(p_star, dtype=np.float64)
        self.params = params
        self.profiles = list(profiles)

    def bid(self, state, bidder, profile, rng):
        return sms_alpha_bid(
            state, bidder, self.profiles, self.p_star, self.params, seed=rng.spawn_seed()
        )

"""Pure numpy/python implementations of the hot auction kernels.

This is the fallback path used when numba is unavailable or when
``SAABID_BACKEND=numpy`` is set.  Semantics (including float operation
order and RNG consumption) are bit-identical to the numba kernels in
``kernels_numba``, which the backend equivalence tests assert.
"""

from __future__ import annotations

import numpy as np

from ._bits import SplitMix64, popcounts, subset_sums, tie_order

NEG_INF = float("-inf")


def bundle_scores(
    values_row: np.ndarray,
    rho: np.ndarray,
    won_mask: int,
    budget: float,
    eligibility: int,
) -> np.ndarray:
    """Predicted utility of every new-bid mask ``X``; -inf where infeasible.

    Score of ``X`` is ``v(X | Y) - sum(rho over X | Y)`` subject to
    ``X`` disjoint from ``Y``, ``|X| + |Y| <= eligibility`` and
    ``sum(rho over X | Y) <= budget``.
    """
    m = rho.size
    pop = popcounts(m)
    masks = np.arange(values_row.size, dtype=np.int64)
    sums = subset_sums(rho)
    full = masks | won_mask
    feasible = (
        ((masks & won_mask) == 0)
        & (pop + int(pop[won_mask]) <= eligibility)
        & (sums[full] <= budget)
    )
    scores = values_row[full] - sums[full]
    return np.where(feasible, scores, NEG_INF)


def best_bundle(
    values_row: np.ndarray,
    rho: np.ndarray,
    won_mask: int,
    budget: float,
    eligibility: int,
) -> int:
    """Utility-maximising new-bid mask with the full tie-break rule.

    Returns 0 (pass) when nothing is feasible, including the degenerate
    case where predicted prices on already-won items exceed the budget.
    """
    scores = bundle_scores(values_row, rho, won_mask, budget, eligibility)
    order = tie_order(rho.size)
    ordered = scores[order]
    i = int(np.argmax(ordered))
    if ordered[i] == NEG_INF:
        return 0
    return int(order[i])


def _pp_round_bids(
    values: np.ndarray,
    budgets: np.ndarray,
    preds: np.ndarray,
    ticks: np.ndarray,
    winner: np.ndarray,
    elig: np.ndarray,
    eps: float,
) -> list[int]:
    n, m = preds.shape
    bids = []
    for i in range(n):
        won_mask = 0
        for j in range(m):
            if winner[j] == i:
                won_mask |= 1 << j
        price = ticks * eps
        rho = np.where(winner == i, np.maximum(preds[i], price), np.maximum(preds[i], price + eps))
        bids.append(best_bundle(values[i], rho, won_mask, float(budgets[i]), int(elig[i])))
    return bids


def playout_core(
    values: np.ndarray,
    budgets: np.ndarray,
    preds: np.ndarray,
    ticks: np.ndarray,
    winner: np.ndarray,
    elig: np.ndarray,
    eps: float,
    max_rounds: int,
    rng_state: int,
) -> tuple[int, int, bool]:
    """Run an all-PP auction to termination, mutating the state arrays.

    Returns ``(rounds_played, rng_state, ok)``; ``ok`` is False only if the
    hard round bound was hit, which indicates an engine bug.
    """
    n, m = preds.shape
    rng = SplitMix64(rng_state)
    rounds = 0
    while rounds < max_rounds:
        bids = _pp_round_bids(values, budgets, preds, ticks, winner, elig, eps)
        rounds += 1
        if not any(bids):
            return rounds, rng.state, True
        new_elig = np.empty_like(elig)
        for i in range(n):
            won = int(np.sum((winner == i).astype(np.int64)))
            new_elig[i] = won + int(bin(bids[i]).count("1"))
        for j in range(m):
            bit = 1 << j
            bidders = [i for i in range(n) if bids[i] & bit]
            if not bidders:
                continue
            ticks[j] += 1
            if len(bidders) == 1:
                winner[j] = bidders[0]
            else:
                winner[j] = bidders[rng.randint(len(bidders))]
        elig[:] = new_elig
    return rounds, rng.state, False


def utilities(values: np.ndarray, ticks: np.ndarray, winner: np.ndarray, eps: float) -> np.ndarray:
    """Final profit of every bidder given closing ticks and allocation."""
    n = values.shape[0]
    m = ticks.size
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        won_mask = 0
        spend = 0.0
        for j in range(m):
            if winner[j] == i:
                won_mask |= 1 << j
                spend += ticks[j] * eps
        out[i] = values[i, won_mask] - spend
    return out


def playout(
    values: np.ndarray,
    budgets: np.ndarray,
    preds: np.ndarray,
    ticks0: np.ndarray,
    winner0: np.ndarray,
    elig0: np.ndarray,
    eps: float,
    max_rounds: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int, np.ndarray, bool]:
    ticks = ticks0.copy()
    winner = winner0.copy()
    elig = elig0.copy()
    rounds, _, ok = playout_core(values, budgets, preds, ticks, winner, elig, eps, max_rounds, seed)
    util = utilities(values, ticks, winner, eps)
    return ticks, winner, elig, rounds, util, ok


def playout_closing_sums(
    values: np.ndarray,
    budgets: np.ndarray,
    preds: np.ndarray,
    ticks0: np.ndarray,
    winner0: np.ndarray,
    elig0: np.ndarray,
    eps: float,
    max_rounds: int,
    seeds: np.ndarray,
) -> np.ndarray:
    """Sum of closing tick vectors over one playout per seed."""
    total = np.zeros(ticks0.size, dtype=np.float64)
    for seed in seeds:
        ticks, _, _, _, _, ok = playout(
            values, budgets, preds, ticks0, winner0, elig0, eps, max_rounds, int(seed)
        )
        if not ok:
            raise RuntimeError("playout exceeded the hard round bound")
        total += ticks
    return total

"""Numba-compiled auction kernels: bundle optimisation, playouts, search.

Default execution path.  Every kernel mirrors the numpy fallback in
``kernels_numpy`` operation-for-operation (same float order, same RNG
stream), so results are bit-identical across backends.  ``fastmath`` stays
off for exactly that reason.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.typed import Dict as NumbaDict

U11 = np.uint64(11)
U27 = np.uint64(27)
U30 = np.uint64(30)
U31 = np.uint64(31)
SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
SM_MUL2 = np.uint64(0x94D049BB133111EB)
DOUBLE_SCALE = 2.0 ** -53
NEG_INF = -np.inf
_KEY_TYPE = types.UniTuple(types.int64, 2)
_VAL_TYPE = types.int64


@njit(cache=True, inline="always")
def _sm_next(state):
    state = state + SM_GAMMA
    z = state
    z ^= z >> U30
    z *= SM_MUL1
    z ^= z >> U27
    z *= SM_MUL2
    z ^= z >> U31
    return state, z


@njit(cache=True, inline="always")
def _lex_less(a, b):
    d = a ^ b
    low = d & -d
    return (a & low) != 0


@njit(cache=True)
def _subset_sums(rho, sums):
    # Same item-by-item recurrence as _bits.subset_sums (bitwise identical).
    sums[0] = 0.0
    for j in range(rho.size):
        base = 1 << j
        for s in range(base):
            sums[base + s] = sums[s] + rho[j]


@njit(cache=True)
def _best_bundle(values_row, sums, won_mask, budget, eligibility, pop):
    """Argmax over new-bid masks of v(X|Y) - rho(X|Y), full tie-break rule."""
    size = values_row.size
    pop_won = pop[won_mask]
    best = -1
    best_score = NEG_INF
    for mask in range(size):
        if mask & won_mask:
            continue
        if pop[mask] + pop_won > eligibility:
            continue
        full = mask | won_mask
        cost = sums[full]
        if cost > budget:
            continue
        score = values_row[full] - cost
        if best < 0:
            best = mask
            best_score = score
        elif score > best_score:
            best = mask
            best_score = score
        elif score == best_score:
            if pop[mask] < pop[best] or (pop[mask] == pop[best] and _lex_less(mask, best)):
                best = mask
    if best < 0:
        return 0
    return best


@njit(cache=True)
def _fill_rho(pred_row, ticks, winner, player, eps, rho):
    for j in range(ticks.size):
        price = ticks[j] * eps
        if winner[j] != player:
            price = price + eps
        rho[j] = max(pred_row[j], price)


@njit(cache=True)
def _won_mask(winner, player):
    mask = 0
    for j in range(winner.size):
        if winner[j] == player:
            mask |= 1 << j
    return mask


@njit(cache=True)
def playout_core(values, budgets, preds, ticks, winner, elig, eps, max_rounds, rng_state):
    n, m = preds.shape
    size = values.shape[1]
    pop = np.zeros(size, dtype=np.int64)
    for j in range(m):
        half = 1 << j
        for s in range(half):
            pop[half + s] = pop[s] + 1
    sums = np.empty(size, dtype=np.float64)
    rho = np.empty(m, dtype=np.float64)
    bids = np.empty(n, dtype=np.int64)
    new_elig = np.empty(n, dtype=np.int64)
    rounds = 0
    while rounds < max_rounds:
        any_bid = False
        for i in range(n):
            _fill_rho(preds[i], ticks, winner, i, eps, rho)
            _subset_sums(rho, sums)
            wm = _won_mask(winner, i)
            bids[i] = _best_bundle(values[i], sums, wm, budgets[i], elig[i], pop)
            if bids[i] != 0:
                any_bid = True
        rounds += 1
        if not any_bid:
            return rounds, rng_state, True
        for i in range(n):
            won = 0
            for j in range(m):
                if winner[j] == i:
                    won += 1
            new_elig[i] = won + pop[bids[i]]
        for j in range(m):
            bit = 1 << j
            cnt = 0
            single = -1
            for i in range(n):
                if bids[i] & bit:
                    cnt += 1
                    single = i
            if cnt == 0:
                continue
            ticks[j] += 1
            if cnt == 1:
                winner[j] = single
            else:
                rng_state, z = _sm_next(rng_state)
                pick = int(z % np.uint64(cnt))
                k = 0
                for i in range(n):
                    if bids[i] & bit:
                        if k == pick:
                            winner[j] = i
                            break
                        k += 1
        for i in range(n):
            elig[i] = new_elig[i]
    return rounds, rng_state, False


@njit(cache=True)
def _utilities(values, ticks, winner, eps, out):
    n = values.shape[0]
    m = ticks.size
    for i in range(n):
        won_mask = 0
        spend = 0.0
        for j in range(m):
            if winner[j] == i:
                won_mask |= 1 << j
                spend += ticks[j] * eps
        out[i] = values[i, won_mask] - spend


@njit(cache=True)
def playout(values, budgets, preds, ticks0, winner0, elig0, eps, max_rounds, seed):
    ticks = ticks0.copy()
    winner = winner0.copy()
    elig = elig0.copy()
    rounds, _, ok = playout_core(
        values, budgets, preds, ticks, winner, elig, eps, max_rounds, np.uint64(seed)
    )
    util = np.empty(values.shape[0], dtype=np.float64)
    _utilities(values, ticks, winner, eps, util)
    return ticks, winner, elig, rounds, util, ok


@njit(cache=True)
def playout_closing_sums(
    values, budgets, preds, ticks0, winner0, elig0, eps, max_rounds, seeds
):
    m = ticks0.size
    total = np.zeros(m, dtype=np.float64)
    for s in range(seeds.size):
        ticks = ticks0.copy()
        winner = winner0.copy()
        elig = elig0.copy()
        rounds, _, ok = playout_core(
            values, budgets, preds, ticks, winner, elig, eps, max_rounds, seeds[s]
        )
        if not ok:
            # Signalled to the caller via a negative marker.
            total[0] = np.nan
            return total
        for j in range(m):
            total[j] += ticks[j]
    return total


@njit(cache=True)
def _hash_state(ticks, winner, elig, root_ticks, n, m, r_max):
    step = r_max * n
    h1 = np.int64(0)
    w = np.int64(1)
    for j in range(m):
        if winner[j] >= 0:
            h1 += (r_max * winner[j] + (ticks[j] - root_ticks[j])) * w
        w *= step
    h2 = np.int64(0)
    base = np.int64(1)
    for i in range(n):
        h2 += elig[i] * base
        base *= m + 1
    return h1, h2


@njit(cache=True)
def _expand_player(
    values_row, pstar, ticks, winner, player, budget, eligibility,
    eps, n_act, pop, sums, rho, out_masks,
):
    """Pick pass plus the (n_act - 1) top predicted-utility bids for one player.

    Candidates must be within predicted budget and eligibility; ranking uses
    the same tie-break rule as the bundle optimiser.  Returns action count.
    """
    _fill_rho(pstar, ticks, winner, player, eps, rho)
    _subset_sums(rho, sums)
    wm = _won_mask(winner, player)
    pop_won = pop[wm]
    out_masks[0] = 0
    count = 1
    size = values_row.size
    for _ in range(n_act - 1):
        best = -1
        best_score = NEG_INF
        for mask in range(1, size):
            if mask & wm:
                continue
            if pop[mask] + pop_won > eligibility:
                continue
            full = mask | wm
            cost = sums[full]
            if cost > budget:
                continue
            taken = False
            for t in range(count):
                if out_masks[t] == mask:
                    taken = True
                    break
            if taken:
                continue
            score = values_row[full] - cost
            if best < 0 or score > best_score:
                best = mask
                best_score = score
            elif score == best_score:
                if pop[mask] < pop[best] or (pop[mask] == pop[best] and _lex_less(mask, best)):
                    best = mask
        if best < 0:
            break
        out_masks[count] = best
        count += 1
    return count


@njit(cache=True)
def search_run(
    values, budgets, pstar, ticks0, winner0, elig0,
    eps, alpha, n_act, r_max, iterations, seed, max_rounds, max_nodes,
):
    """Full simultaneous-move MCTS with decoupled UCT and a transposition table.

    Returns the root per-player action tables plus tree statistics.  Mirrors
    the pure-python driver in ``search.py`` exactly (same RNG stream, same
    float operations), which the equivalence tests rely on.
    """
    n, size = values.shape
    m = ticks0.size
    rng = np.uint64(seed)

    node_ticks = np.empty((max_nodes, m), dtype=np.int64)
    node_winner = np.empty((max_nodes, m), dtype=np.int64)
    node_elig = np.empty((max_nodes, n), dtype=np.int64)
    act_masks = np.empty((max_nodes, n, n_act), dtype=np.int64)
    act_cnt = np.empty((max_nodes, n), dtype=np.int64)
    st_r = np.empty((max_nodes, n, n_act), dtype=np.float64)
    st_a = np.empty((max_nodes, n, n_act), dtype=np.float64)
    st_c = np.empty((max_nodes, n, n_act), dtype=np.float64)
    st_vis = np.empty((max_nodes, n, n_act), dtype=np.int64)
    st_tot = np.empty((max_nodes, n), dtype=np.int64)

    pop = np.zeros(size, dtype=np.int64)
    for j in range(m):
        half = 1 << j
        for s in range(half):
            pop[half + s] = pop[s] + 1
    sums = np.empty(size, dtype=np.float64)
    rho = np.empty(m, dtype=np.float64)

    child_ticks = np.empty(m, dtype=np.int64)
    child_winner = np.empty(m, dtype=np.int64)
    child_elig = np.empty(n, dtype=np.int64)
    roll_ticks = np.empty(m, dtype=np.int64)
    roll_winner = np.empty(m, dtype=np.int64)
    roll_elig = np.empty(n, dtype=np.int64)
    roll_preds = np.empty((n, m), dtype=np.float64)
    rewards = np.empty(n, dtype=np.float64)
    bids = np.empty(n, dtype=np.int64)
    path_node = np.empty(r_max + 1, dtype=np.int64)
    path_act = np.empty((r_max + 1, n), dtype=np.int64)

    def _init_node(idx, ticks, winner, elig):
        for j in range(m):
            node_ticks[idx, j] = ticks[j]
            node_winner[idx, j] = winner[j]
        for i in range(n):
            node_elig[idx, i] = elig[i]
        for i in range(n):
            cnt = _expand_player(
                values[i], pstar, ticks, winner, i, budgets[i], elig[i],
                eps, n_act, pop, sums, rho, act_masks[idx, i],
            )
            act_cnt[idx, i] = cnt
            st_tot[idx, i] = 0
            for a in range(cnt):
                st_r[idx, i, a] = 0.0
                st_a[idx, i, a] = np.inf
                st_c[idx, i, a] = -np.inf
                st_vis[idx, i, a] = 0

    table = NumbaDict.empty(key_type=_KEY_TYPE, value_type=_VAL_TYPE)

    node_count = 1
    _init_node(0, ticks0, winner0, elig0)
    h1, h2 = _hash_state(ticks0, winner0, elig0, ticks0, n, m, r_max)
    table[(h1, h2)] = np.int64(0)

    ok = 1
    it = 0
    while it < iterations:
        it += 1
        cur = 0
        depth = 0
        plen = 0
        while True:
            # Decoupled selection: per player, unvisited first then UCT.
            for i in range(n):
                cnt = act_cnt[cur, i]
                chosen = -1
                for a in range(cnt):
                    if st_vis[cur, i, a] == 0:
                        chosen = a
                        break
                if chosen < 0:
                    tot = st_tot[cur, i]
                    log_term = 2.0 * np.log(np.float64(tot))
                    best_q = NEG_INF
                    for a in range(cnt):
                        nv = st_vis[cur, i, a]
                        width = st_c[cur, i, a] - st_a[cur, i, a]
                        if width < eps:
                            width = eps
                        q = st_r[cur, i, a] / nv + width * np.sqrt(log_term / nv)
                        if q > best_q:
                            best_q = q
                            chosen = a
                path_act[plen, i] = chosen
                bids[i] = act_masks[cur, i, chosen]
            path_node[plen] = cur
            plen += 1

            # Resolve the joint round (explicit chance via seeded draws).
            any_bid = False
            for i in range(n):
                if bids[i] != 0:
                    any_bid = True
                    break
            if not any_bid:
                _utilities(values, node_ticks[cur], node_winner[cur], eps, rewards)
                break
            for i in range(n):
                won = 0
                for j in range(m):
                    if node_winner[cur, j] == i:
                        won += 1
                child_elig[i] = won + pop[bids[i]]
            for j in range(m):
                child_ticks[j] = node_ticks[cur, j]
                child_winner[j] = node_winner[cur, j]
            for j in range(m):
                bit = 1 << j
                cnt = 0
                single = -1
                for i in range(n):
                    if bids[i] & bit:
                        cnt += 1
                        single = i
                if cnt == 0:
                    continue
                child_ticks[j] += 1
                if cnt == 1:
                    child_winner[j] = single
                else:
                    rng, z = _sm_next(rng)
                    pick = int(z % np.uint64(cnt))
                    k = 0
                    for i in range(n):
                        if bids[i] & bit:
                            if k == pick:
                                child_winner[j] = i
                                break
                            k += 1

            depth += 1
            do_rollout = False
            if depth >= r_max:
                do_rollout = True
            else:
                h1, h2 = _hash_state(child_ticks, child_winner, child_elig, ticks0, n, m, r_max)
                key = (h1, h2)
                if key in table:
                    cur = table[key]
                    continue
                if node_count < max_nodes:
                    _init_node(node_count, child_ticks, child_winner, child_elig)
                    table[key] = np.int64(node_count)
                    node_count += 1
                do_rollout = True

            if do_rollout:
                # Fresh per-player noisy predictions, then an all-PP playout.
                for i in range(n):
                    for j in range(m):
                        rng, z = _sm_next(rng)
                        u = (z >> U11) * DOUBLE_SCALE
                        p = pstar[j] + (2.0 * u - 1.0) * eps
                        roll_preds[i, j] = p if p > 0.0 else 0.0
                for j in range(m):
                    roll_ticks[j] = child_ticks[j]
                    roll_winner[j] = child_winner[j]
                for i in range(n):
                    roll_elig[i] = child_elig[i]
                rounds, rng, pok = playout_core(
                    values, budgets, roll_preds, roll_ticks, roll_winner,
                    roll_elig, eps, max_rounds, rng,
                )
                if not pok:
                    ok = 0
                    it = iterations
                _utilities(values, roll_ticks, roll_winner, eps, rewards)
                break

        # Risk-averse transform, then backpropagate along the selected path.
        for i in range(n):
            if rewards[i] < 0.0:
                rewards[i] = (1.0 + alpha) * rewards[i]
        for p in range(plen):
            nd = path_node[p]
            for i in range(n):
                a = path_act[p, i]
                st_r[nd, i, a] += rewards[i]
                st_vis[nd, i, a] += 1
                st_tot[nd, i] += 1
                if rewards[i] < st_a[nd, i, a]:
                    st_a[nd, i, a] = rewards[i]
                if rewards[i] > st_c[nd, i, a]:
                    st_c[nd, i, a] = rewards[i]

    root_masks = np.empty((n, n_act), dtype=np.int64)
    root_r = np.empty((n, n_act), dtype=np.float64)
    root_a = np.empty((n, n_act), dtype=np.float64)
    root_c = np.empty((n, n_act), dtype=np.float64)
    root_vis = np.empty((n, n_act), dtype=np.int64)
    root_cnt = np.empty(n, dtype=np.int64)
    for i in range(n):
        cnt = act_cnt[0, i]
        root_cnt[i] = cnt
        for a in range(n_act):
            if a < cnt:
                root_masks[i, a] = act_masks[0, i, a]
                root_r[i, a] = st_r[0, i, a]
                root_a[i, a] = st_a[0, i, a]
                root_c[i, a] = st_c[0, i, a]
                root_vis[i, a] = st_vis[0, i, a]
            else:
                root_masks[i, a] = -1
                root_r[i, a] = 0.0
                root_a[i, a] = np.inf
                root_c[i, a] = -np.inf
                root_vis[i, a] = 0
    return root_masks, root_r, root_vis, root_a, root_c, root_cnt, it, node_count, ok

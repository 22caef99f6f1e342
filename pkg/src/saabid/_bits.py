"""Bitmask subset utilities and the deterministic in-engine RNG.

Item subsets are bitmasks (item ``j`` is bit ``j``), so a value table over
all bundles is a flat array of length ``2**m`` indexed by mask.  Tie-break
order for bundle optimisation is (utility desc, subset size asc, then
lexicographically smallest sorted item list); the helpers here provide the
mask ordering that realises the last two criteria.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable

import numpy as np

_MASK64 = (1 << 64) - 1
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MUL1 = 0xBF58476D1CE4E5B9
_SM_MUL2 = 0x94D049BB133111EB
_DOUBLE_SCALE = 2.0 ** -53


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning ``(new_state, output)``.

    Plain integer arithmetic, so the numba kernels can reproduce the exact
    same stream with wrapping ``uint64`` operations.
    """
    state = (state + _SM_GAMMA) & _MASK64
    z = state
    z ^= z >> 30
    z = (z * _SM_MUL1) & _MASK64
    z ^= z >> 27
    z = (z * _SM_MUL2) & _MASK64
    z ^= z >> 31
    return state, z


class SplitMix64:
    """Tiny seeded RNG used for every stochastic draw inside an auction.

    One instance per auction (or per search) keeps replays deterministic and
    bit-identical across the numba and numpy execution paths.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state, z = splitmix64(self.state)
        return z

    def uniform(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _DOUBLE_SCALE

    def randint(self, k: int) -> int:
        """Uniform integer in [0, k)."""
        return self.next_u64() % k

    def spawn_seed(self) -> int:
        """Derive a child seed (for a nested playout or rollout)."""
        return self.next_u64()


def mask_of(items: Iterable[int], m: int | None = None) -> int:
    mask = 0
    for j in items:
        if m is not None and not 0 <= j < m:
            raise ValueError(f"item {j} out of range for {m} items")
        mask |= 1 << j
    return mask


def items_of(mask: int) -> frozenset[int]:
    items = []
    j = 0
    while mask:
        if mask & 1:
            items.append(j)
        mask >>= 1
        j += 1
    return frozenset(items)


@lru_cache(maxsize=32)
def popcounts(m: int) -> np.ndarray:
    """Bit counts for every mask in [0, 2**m)."""
    pop = np.zeros(1 << m, dtype=np.int64)
    for j in range(m):
        half = 1 << j
        pop[half : 2 * half] = pop[:half] + 1
    pop.setflags(write=False)
    return pop


@lru_cache(maxsize=32)
def tie_order(m: int) -> np.ndarray:
    """All masks ordered by (popcount asc, lexicographic sorted-item list asc).

    Scanning masks in this order and keeping the first strict maximum
    implements the bundle tie-break rule directly.
    """
    idx = np.arange(1 << m, dtype=np.int64)
    rev = np.zeros(1 << m, dtype=np.int64)
    for j in range(m):
        rev |= ((idx >> j) & 1) << (m - 1 - j)
    # Descending bit-reversed value == ascending lexicographic item lists.
    order = np.lexsort((-rev, popcounts(m)))
    order = order.astype(np.int64)
    order.setflags(write=False)
    return order


def lex_less(a: int, b: int) -> bool:
    """True if mask ``a`` has the lexicographically smaller sorted item list.

    For the (equal popcount) tie-break: the lowest differing bit decides.
    """
    if a == b:
        return False
    d = a ^ b
    low = d & -d
    return (a & low) != 0


def subset_sums(weights: np.ndarray) -> np.ndarray:
    """Sum of ``weights`` over every mask, index = mask.

    Built by adding items in increasing index order; the numba kernels use
    the same recurrence so both paths produce bit-identical floats.
    """
    sums = np.zeros(1, dtype=np.float64)
    for w in weights:
        sums = np.concatenate((sums, sums + w))
    return sums

"""Value functions over item bundles: random generation and fixed instances.

A value function is an exhaustive table over all ``2**m`` bundles, indexed
by bitmask, normalised (empty bundle worth 0) and expected to satisfy free
disposal (supersets are never worth less).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._bits import items_of, mask_of, popcounts
from .auction import AuctionConfig, BidderProfile


@dataclass(frozen=True)
class ValueFunction:
    m_items: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.float64)
        if table.shape != (1 << self.m_items,):
            raise ValueError(f"table must have 2**{self.m_items} entries")
        if table[0] != 0.0:
            raise ValueError("the empty bundle must be worth 0")
        if not np.all(np.isfinite(table)):
            raise ValueError("bundle values must be finite")
        table = table.copy()
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def value(self, bundle: Iterable[int] | int) -> float:
        mask = bundle if isinstance(bundle, int) else mask_of(bundle, self.m_items)
        return float(self.table[mask])

    def to_dict(self) -> dict:
        return {"m_items": self.m_items, "table": self.table.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ValueFunction":
        return cls(m_items=d["m_items"], table=np.asarray(d["table"], dtype=np.float64))


@dataclass(frozen=True)
class GeneratorParams:
    """Random-instance knobs: complementarity surplus cap and budget bounds."""

    v_cap: float
    b_min: float
    b_max: float

    def __post_init__(self):
        if self.v_cap < 0:
            raise ValueError("the surplus cap must be non-negative")
        if self.b_min > self.b_max:
            raise ValueError("b_min must not exceed b_max")


def generate_value_function(
    m: int, params: GeneratorParams, rng: np.random.Generator
) -> ValueFunction:
    """Draw a random free-disposal value function.

    Bundles are filled in non-decreasing size order.  A bundle ``X`` with
    ``|X| >= 2`` draws uniformly from ``[L, V + L + v({j*})]`` where
    ``L = max_j v(X \\ {j})`` and ``j*`` attains that max (lowest index on
    ties); singletons draw from ``[0, V]``.  The lower bound makes free
    disposal hold by construction; the upper bound caps the extra surplus
    an added item can contribute at ``V``.
    """
    if m < 1:
        raise ValueError("need at least one item")
    size = 1 << m
    table = np.zeros(size, dtype=np.float64)
    pop = popcounts(m)
    order = np.argsort(pop, kind="stable")
    for mask in order:
        mask = int(mask)
        k = pop[mask]
        if k == 0:
            continue
        if k == 1:
            table[mask] = rng.uniform(0.0, params.v_cap)
            continue
        best_j = -1
        best_v = -np.inf
        rest = mask
        while rest:
            low = rest & -rest
            j = low.bit_length() - 1
            v = table[mask ^ low]
            if v > best_v:
                best_v = v
                best_j = j
            rest ^= low
        lo = best_v
        hi = params.v_cap + best_v + table[1 << best_j]
        table[mask] = rng.uniform(lo, hi)
    return ValueFunction(m_items=m, table=table)


def generate_profile(m: int, params: GeneratorParams, rng: np.random.Generator) -> BidderProfile:
    budget = float(rng.uniform(params.b_min, params.b_max))
    return BidderProfile(budget=budget, values=generate_value_function(m, params, rng))


def generate_instance(
    config: AuctionConfig, params: GeneratorParams, rng: np.random.Generator
) -> list[BidderProfile]:
    """Budgets and value functions drawn independently for every bidder."""
    return [generate_profile(config.m_items, params, rng) for _ in range(config.n_bidders)]


def check_free_disposal(v: ValueFunction) -> bool:
    """Monotone over the subset lattice, checked on all covering pairs."""
    return find_free_disposal_violation(v) is None


def find_free_disposal_violation(
    v: ValueFunction,
) -> tuple[frozenset, frozenset] | None:
    """Return a covering pair (X, X + {j}) with v(X) > v(X + {j}), if any."""
    m = v.m_items
    masks = np.arange(1 << m, dtype=np.int64)
    for j in range(m):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        bad = without[v.table[without] > v.table[without | bit]]
        if bad.size:
            mask = int(bad[0])
            return items_of(mask), items_of(mask | bit)
    return None


def exposure_instance(
    budget1: float = 100.0, budget2: float = 100.0
) -> tuple[AuctionConfig, tuple[BidderProfile, BidderProfile]]:
    """The canonical 2x2 exposure instance (increment 1).

    Bidder 0 sees the items as perfect substitutes (12 for anything
    non-empty); bidder 1 as perfect complements (20 for the pair, else 0).
    Budgets of 24 or more behave as unlimited.
    """
    config = AuctionConfig(n_bidders=2, m_items=2, epsilon=1.0)
    v1 = ValueFunction(m_items=2, table=np.array([0.0, 12.0, 12.0, 12.0]))
    v2 = ValueFunction(m_items=2, table=np.array([0.0, 0.0, 0.0, 20.0]))
    return config, (BidderProfile(budget1, v1), BidderProfile(budget2, v2))


def instance_to_dict(config: AuctionConfig, profiles: Sequence[BidderProfile]) -> dict:
    return {
        "config": {
            "n_bidders": config.n_bidders,
            "m_items": config.m_items,
            "epsilon": config.epsilon,
            "rng_seed": config.rng_seed,
        },
        "profiles": [
            {"budget": p.budget, "values": p.values.to_dict()} for p in profiles
        ],
    }


def instance_from_dict(d: dict) -> tuple[AuctionConfig, list[BidderProfile]]:
    c = d["config"]
    config = AuctionConfig(
        n_bidders=c["n_bidders"],
        m_items=c["m_items"],
        epsilon=c["epsilon"],
        rng_seed=c.get("rng_seed", 0),
    )
    profiles = [
        BidderProfile(budget=p["budget"], values=ValueFunction.from_dict(p["values"]))
        for p in d["profiles"]
    ]
    if len(profiles) != config.n_bidders:
        raise ValueError("profile count does not match the bidder count")
    return config, profiles


def save_instance(path: str | Path, config: AuctionConfig, profiles: Sequence[BidderProfile]):
    Path(path).write_text(json.dumps(instance_to_dict(config, profiles), sort_keys=True))


def load_instance(path: str | Path) -> tuple[AuctionConfig, list[BidderProfile]]:
    return instance_from_dict(json.loads(Path(path).read_text()))

"""Closing-price prediction via a Monte-Carlo averaged fixed-point iteration.

``f(p)`` denotes the (random) closing price vector when every bidder plays
PP with initial prediction ``p``.  The averaged sequence

    p_0 = 0,   p_{t+1} = E[f(p_t)] / (t+1) + (1 - 1/(t+1)) p_t

is observed to converge to a unique vector ``p*`` (convergence is
conjectural in general, so non-convergence is reported in the trace rather
than raised).  Expectations are estimated by simulating complete auctions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import backend
from ._bits import SplitMix64
from .auction import AuctionConfig, AuctionState, BidderProfile, pack_profiles, termination_bound


@dataclass(frozen=True)
class PredictorParams:
    mc_samples: int = 2000
    max_iters: int = 300
    tolerance: float | None = None  # defaults to epsilon / 10 at run time
    rng_seed: int = 0

    def __post_init__(self):
        if self.mc_samples < 1 or self.max_iters < 1:
            raise ValueError("sample and iteration counts must be positive")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class ConvergenceTrace:
    """Iterates of the averaged sequence with sup-norm deltas."""

    points: list[np.ndarray] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    def to_records(self) -> list[dict]:
        recs = [{"iteration": 0, "p": self.points[0].tolist(), "delta": None}]
        for t, (p, d) in enumerate(zip(self.points[1:], self.deltas), start=1):
            recs.append({"iteration": t, "p": p.tolist(), "delta": d})
        return recs

    def save(self, path: str | Path):
        payload = {"converged": self.converged, "trace": self.to_records()}
        Path(path).write_text(json.dumps(payload))


def _playout_inputs(config: AuctionConfig, profiles: Sequence[BidderProfile], state=None):
    values, budgets = pack_profiles(profiles, config.m_items)
    if state is None:
        state = AuctionState.initial(config)
    ticks0 = np.asarray(state.ticks, dtype=np.int64)
    winner0 = np.asarray(state.winner, dtype=np.int64)
    elig0 = np.asarray(state.eligibility, dtype=np.int64)
    max_rounds = termination_bound(profiles, config.epsilon) + 1
    return values, budgets, ticks0, winner0, elig0, max_rounds


def estimate_expected_closing(
    config: AuctionConfig,
    profiles: Sequence[BidderProfile],
    p: np.ndarray,
    samples: int,
    rng: SplitMix64 | int,
) -> np.ndarray:
    """Mean closing prices over full all-PP(p) self-play auctions."""
    if samples < 1:
        raise ValueError("need at least one sample")
    if isinstance(rng, int):
        rng = SplitMix64(rng)
    kern = backend.get_kernels()
    values, budgets, ticks0, winner0, elig0, max_rounds = _playout_inputs(config, profiles)
    preds = np.tile(np.asarray(p, dtype=np.float64), (config.n_bidders, 1))
    seeds = np.array([rng.next_u64() for _ in range(samples)], dtype=np.uint64)
    sums = kern.playout_closing_sums(
        values, budgets, preds, ticks0, winner0, elig0, config.epsilon, max_rounds, seeds
    )
    if np.any(np.isnan(sums)):
        raise RuntimeError("playout exceeded the hard round bound")
    return sums / samples * config.epsilon


def iterate_prediction(
    config: AuctionConfig,
    profiles: Sequence[BidderProfile],
    params: PredictorParams,
    progress=None,
) -> tuple[np.ndarray, ConvergenceTrace]:
    """Run the averaged fixed-point iteration from the zero vector.

    Stops on a sup-norm step below the tolerance (default epsilon/10) or
    after ``max_iters`` iterations; fresh independent auction samples are
    drawn every iteration.  ``progress(done, total)`` is invoked after each
    iteration when given.
    """
    tol = params.tolerance if params.tolerance is not None else config.epsilon / 10.0
    rng = SplitMix64(params.rng_seed)
    p = np.zeros(config.m_items, dtype=np.float64)
    trace = ConvergenceTrace(points=[p.copy()])
    for t in range(params.max_iters):
        est = estimate_expected_closing(config, profiles, p, params.mc_samples, rng)
        w = 1.0 / (t + 1.0)
        p_next = w * est + (1.0 - w) * p
        delta = float(np.max(np.abs(p_next - p)))
        trace.points.append(p_next.copy())
        trace.deltas.append(delta)
        p = p_next
        if progress is not None:
            progress(t + 1, params.max_iters)
        if delta < tol:
            trace.converged = True
            break
    return p, trace


def exposure_closed_form(p: np.ndarray) -> np.ndarray:
    """Exact E[f(p)] for the canonical 2x2 exposure instance.

    Valid on [0, 11.5]^2 only; serves as the oracle for the Monte-Carlo
    estimator.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (2,):
        raise ValueError("expected a length-2 prediction")
    if np.any(p < 0) or np.any(p > 11.5):
        raise ValueError("closed form is valid on [0, 11.5]^2 only")
    p1, p2 = float(p[0]), float(p[1])
    if p1 + p2 >= 20.0:
        return np.array([1.0, 0.0]) if p1 <= p2 else np.array([0.0, 1.0])
    return np.array([11.5, 11.0]) if p1 <= p2 else np.array([11.0, 11.5])

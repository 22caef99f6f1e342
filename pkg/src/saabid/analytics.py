"""Performance indicators, empirical-game construction and size formulas.

Expected utility decomposes into a gains term and an exposure term:

    E[R] = P(R >= 0) E[R | R >= 0] - expected_exposure

where expected_exposure = -P(R < 0) E[R | R < 0] is estimated as total
losses over the number of plays.  Exposure frequency is the loss rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence


@dataclass(frozen=True)
class MetricsReport:
    expected_utility: float
    exposure_frequency: float
    expected_exposure: float
    avg_price_per_item_won: float | None
    ratio_items_won: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "expected_utility": self.expected_utility,
            "exposure_frequency": self.exposure_frequency,
            "expected_exposure": self.expected_exposure,
            "avg_price_per_item_won": self.avg_price_per_item_won,
            "ratio_items_won": self.ratio_items_won,
            "sample_count": self.sample_count,
        }


def compute_metrics(
    rewards: Sequence[float],
    items_won: Sequence[int],
    spend: Sequence[float],
    m: int,
) -> MetricsReport:
    """Estimators over per-play samples of one strategy (group).

    ``ratio_items_won`` divides the focal group's items by ``m`` per play and
    averages; the decomposition identity holds exactly on the samples.
    """
    n = len(rewards)
    if n < 1:
        raise ValueError("need at least one sample")
    if len(items_won) != n or len(spend) != n:
        raise ValueError("sample vectors must have identical length")
    losses = [r for r in rewards if r < 0]
    total_items = sum(items_won)
    total_spend = sum(spend)
    return MetricsReport(
        expected_utility=sum(rewards) / n,
        exposure_frequency=len(losses) / n,
        expected_exposure=-sum(losses) / n,
        avg_price_per_item_won=(total_spend / total_items) if total_items else None,
        ratio_items_won=total_items / (n * m),
        sample_count=n,
    )


def decomposition_identity_gap(report: MetricsReport, rewards: Sequence[float]) -> float:
    """|E[R] - (P(R>=0) E[R|R>=0] - expected_exposure)| on the samples."""
    gains = [r for r in rewards if r >= 0]
    pos_term = (len(gains) / len(rewards)) * (sum(gains) / len(gains)) if gains else 0.0
    return abs(report.expected_utility - (pos_term - report.expected_exposure))


def profile_average(values: Sequence[float]) -> float:
    """Mean over the mixed-profile measurements of one A-vs-B confrontation."""
    if not values:
        raise ValueError("need at least one profile value")
    return sum(values) / len(values)


@dataclass(frozen=True)
class EmpiricalGame:
    """Symmetric two-strategy empirical game.

    ``utilities[k]`` is the pair (mean utility of an A player, mean utility
    of a B player) at the profile with k players of strategy A; entries are
    None when the profile has no player of that strategy.
    """

    strategy_a: str
    strategy_b: str
    n_players: int
    utilities: tuple[tuple[float | None, float | None], ...]

    def __post_init__(self):
        if len(self.utilities) != self.n_players + 1:
            raise ValueError("need one profile entry per count of A players")

    def deviation_gain(self, from_count: int) -> float:
        """Expected-utility change for a B player switching to A."""
        if not 0 <= from_count < self.n_players:
            raise ValueError("a B player exists only for from_count < n_players")
        before = self.utilities[from_count][1]
        after = self.utilities[from_count + 1][0]
        return after - before

    def to_dict(self) -> dict:
        return {
            "strategy_a": self.strategy_a,
            "strategy_b": self.strategy_b,
            "n_players": self.n_players,
            "utilities": [list(u) for u in self.utilities],
        }


def build_empirical_game(
    strategy_a: str,
    strategy_b: str,
    n_players: int,
    play_profile: Callable[[tuple[str, ...]], Sequence[Sequence[float]]],
    ) -> EmpiricalGame:
    """Map every symmetric profile (A x k, B x (n-k)) to per-role utilities.

    ``play_profile`` returns per-play utility vectors for one profile; roles
    playing the same strategy are averaged together.
    """
    if strategy_a == strategy_b:
        raise ValueError("the two strategies must differ")
    rows = []
    for k in range(n_players + 1):
        profile = tuple([strategy_a] * k + [strategy_b] * (n_players - k))
        plays = play_profile(profile)
        a_total, a_count, b_total, b_count = 0.0, 0, 0.0, 0
        for utilities in plays:
            for seat, u in enumerate(utilities):
                if seat < k:
                    a_total += u
                    a_count += 1
                else:
                    b_total += u
                    b_count += 1
        rows.append(
            (
                a_total / a_count if a_count else None,
                b_total / b_count if b_count else None,
            )
        )
    return EmpiricalGame(strategy_a, strategy_b, n_players, tuple(rows))


def deviation_profitable(game: EmpiricalGame, from_count: int) -> bool:
    """True when a B player strictly gains by switching to A."""
    return game.deviation_gain(from_count) > 0


def info_set_count(n: int, m: int, r: int) -> int:
    """Number of reachable information sets: n (rn + 1)^m, exact big integer.

    Unlimited budgets and no activity rule; an item either stays with the
    auctioneer or carries one of r prices and n owners, independently.
    """
    if n < 1 or r < 1 or m < 0:
        raise ValueError("need n >= 1, r >= 1, m >= 0")
    return n * (r * n + 1) ** m


def game_tree_lower_bound_log10(n: int, m: int, r: int) -> float:
    """log10 of the game-tree-size lower bound 2^(m (n-1) r)."""
    if n < 1 or m < 0 or r < 0:
        raise ValueError("need n >= 1, m >= 0, r >= 0")
    return m * (n - 1) * r * math.log10(2.0)

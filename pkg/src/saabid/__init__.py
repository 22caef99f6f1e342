"""Simultaneous ascending auction engine, bidding agents and tooling."""

from ._bits import SplitMix64, items_of, mask_of
from .auction import (
    AUCTIONEER,
    AuctionConfig,
    AuctionError,
    AuctionState,
    BidderProfile,
    IllegalBidError,
    Outcome,
    RoundRecord,
    apply_round,
    apply_round_observed,
    legal_bids,
    outcome_of,
    play_out,
    risk_averse_utility,
    utility,
)
from .valuations import (
    GeneratorParams,
    ValueFunction,
    check_free_disposal,
    exposure_instance,
    generate_instance,
    generate_value_function,
)
from .strategies import (
    PPStrategy,
    SBStrategy,
    StrategyContext,
    available_strategies,
    create_strategy,
    epe_prediction,
    pp_bid,
    register_strategy,
    rho,
    sb_bid,
)
from .prediction import (
    ConvergenceTrace,
    PredictorParams,
    exposure_closed_form,
    estimate_expected_closing,
    iterate_prediction,
)
from .search import (
    SearchParams,
    SearchResult,
    SMSStrategy,
    hash_eligibility,
    hash_prices_allocation,
    sms_alpha_bid,
)
from .analytics import (
    EmpiricalGame,
    MetricsReport,
    build_empirical_game,
    compute_metrics,
    deviation_profitable,
    game_tree_lower_bound_log10,
    info_set_count,
    profile_average,
)

__version__ = "0.1.0"

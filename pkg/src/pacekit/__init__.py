"""pacekit: MPC bidding with isotonic bid landscapes, pacing baselines,
and a seeded second-price auction benchmark harness."""

from .auction import (
    AuctionOpportunity,
    AuctionOutcome,
    CampaignConfig,
    CycleRecord,
    EpisodeResult,
    MarketParams,
    run_auction,
    run_episode,
    sample_opportunity,
)
from .baselines import (
    ConstantBid,
    DogdState,
    DogdStrategy,
    OracleResult,
    PidState,
    PidStrategy,
    dogd_next_bid,
    hindsight_optimal_constant_bid,
    pid_next_bid,
)
from .config import ConfigError, ExperimentConfig, load_config
from .harness import (
    AlgorithmSummary,
    BenchmarkResult,
    run_benchmark,
    sweep_initial_bid,
)
from .isotonic import (
    BidValuePair,
    InsufficientDataError,
    MonotoneCurve,
    UninvertibleCurveError,
    eval_curve,
    invert_curve,
    pava,
)
from .metrics import bid_variance, bur, cpv
from .strategies import (
    CampaignState,
    MpcCostCap,
    MpcMaxDelivery,
    PacingObservation,
    adjusted_cost_cap,
    build_cost_curve,
    mpc_cost_cap_bid,
    mpc_max_delivery_bid,
    target_spend,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionOpportunity",
    "AuctionOutcome",
    "AlgorithmSummary",
    "BenchmarkResult",
    "BidValuePair",
    "CampaignConfig",
    "CampaignState",
    "ConfigError",
    "ConstantBid",
    "CycleRecord",
    "DogdState",
    "DogdStrategy",
    "EpisodeResult",
    "ExperimentConfig",
    "InsufficientDataError",
    "MarketParams",
    "MonotoneCurve",
    "MpcCostCap",
    "MpcMaxDelivery",
    "OracleResult",
    "PacingObservation",
    "PidState",
    "PidStrategy",
    "UninvertibleCurveError",
    "adjusted_cost_cap",
    "bid_variance",
    "bur",
    "build_cost_curve",
    "cpv",
    "dogd_next_bid",
    "eval_curve",
    "hindsight_optimal_constant_bid",
    "invert_curve",
    "load_config",
    "mpc_cost_cap_bid",
    "mpc_max_delivery_bid",
    "pava",
    "pid_next_bid",
    "run_auction",
    "run_benchmark",
    "run_episode",
    "sample_opportunity",
    "sweep_initial_bid",
    "target_spend",
]

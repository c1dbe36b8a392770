"""Second-price auction market simulation and per-episode accounting.

Opportunities carry a welfare utility r (e.g. a video play rate) and the
highest competing eCPM c; a campaign bidding b per conversion competes
with eCPM b*r and, on a win, pays c and is credited r. Episodes group
the request stream into fixed-size pacing cycles, hold the bid constant
within a cycle, and ask the strategy for a new bid at each boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .strategies import CampaignState, PacingObservation, target_spend

# An episode stops once the remaining budget cannot meaningfully be spent.
BUDGET_EPS = 1e-12


def _min_representable_cost(market: "MarketParams") -> float:
    # Costs below mu_c - 5 sigma_c have probability ~3e-7 per draw; once
    # the remaining budget is under this, further wins are negligible
    # (worth under this threshold) and the episode is depleted.
    return max(math.exp(market.mu_c - 5.0 * market.sigma_c), BUDGET_EPS)


@dataclass(frozen=True)
class AuctionOpportunity:
    """One auction request: welfare utility r and highest competing eCPM c."""

    r: float
    c: float

    def __post_init__(self):
        if self.r <= 0 or self.c <= 0:
            raise ValueError(f"r and c must be positive, got r={self.r}, c={self.c}")


@dataclass(frozen=True)
class MarketParams:
    """Log-normal market distributions and the request-stream shape.

    The welfare utility is LogNorm(mu_r, sigma_r) and the competing eCPM
    LogNorm(mu_c, sigma_c), drawn independently per request. The stream
    of total_opportunities requests is split into pacing cycles of
    cycle_size requests (the final cycle may be short). request_noise, if
    positive, perturbs the next-cycle request-count prediction by a
    multiplicative log-normal factor.
    """

    mu_r: float = -3.0
    sigma_r: float = 0.5
    mu_c: float = math.log(0.00025)
    sigma_c: float = 0.6
    total_opportunities: int = 50_000
    cycle_size: int = 50
    request_noise: float = 0.0

    def __post_init__(self):
        if self.sigma_r < 0 or self.sigma_c < 0:
            raise ValueError("sigma_r and sigma_c must be nonnegative")
        if self.total_opportunities < 1:
            raise ValueError("total_opportunities must be >= 1")
        if not 1 <= self.cycle_size <= self.total_opportunities:
            raise ValueError(
                f"cycle_size must be in [1, total_opportunities], got "
                f"{self.cycle_size} with T={self.total_opportunities}"
            )
        if self.request_noise < 0:
            raise ValueError("request_noise must be nonnegative")


@dataclass(frozen=True)
class AuctionOutcome:
    """Result of one auction: whether won, cost charged, welfare credited."""

    won: bool
    cost: float
    conversions_credit: float


@dataclass(frozen=True)
class CampaignConfig:
    """Campaign-level bidding configuration.

    budget may be zero only to model the degenerate never-binding case;
    cost_cap is None for max-delivery campaigns. grid_max doubles as the
    hard upper clamp on strategy bids.
    """

    budget: float = 2.0
    cost_cap: Optional[float] = None
    initial_bid: float = 0.0005
    window_n: int = 20
    grid_max: float = 0.01
    grid_step: float = 5e-5
    jitter: bool = True
    bernoulli_conversions: bool = False

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if self.cost_cap is not None and self.cost_cap <= 0:
            raise ValueError("cost_cap must be positive when set")
        if self.initial_bid <= 0:
            raise ValueError("initial_bid must be positive")
        if self.window_n < 1:
            raise ValueError("window_n must be >= 1")
        if not self.grid_max > self.grid_step > 0:
            raise ValueError("grid_max > grid_step > 0 required")


@dataclass(frozen=True)
class CycleRecord:
    """Per-cycle trace row of an episode."""

    cycle: int
    bid: float
    target_spend: float
    spend: float
    conversions: float
    requests: int
    wins: int
    remaining_after: float


@dataclass
class EpisodeResult:
    """Totals and the full per-cycle trace of one simulated episode."""

    total_spend: float
    impressions: int
    conversions: float
    budget: float
    cycles: list = field(default_factory=list)

    @property
    def bids(self) -> list:
        return [rec.bid for rec in self.cycles]

    @property
    def remaining_budget(self) -> float:
        return self.budget - self.total_spend


def sample_opportunity(rng: np.random.Generator, params: MarketParams) -> AuctionOpportunity:
    """Draw one opportunity; identical generators yield identical draws."""
    r = rng.lognormal(params.mu_r, params.sigma_r)
    c = rng.lognormal(params.mu_c, params.sigma_c)
    return AuctionOpportunity(r=r, c=c)


def run_auction(
    bid_per_conversion: float,
    opp: AuctionOpportunity,
    remaining_budget: float,
) -> AuctionOutcome:
    """Second-price outcome for one request: win iff the campaign eCPM
    strictly beats the competitor and the cost fits the remaining budget
    (exact eCPM ties lose)."""
    if bid_per_conversion < 0:
        raise ValueError("bid must be nonnegative")
    if remaining_budget < 0:
        raise ValueError("remaining_budget must be nonnegative")
    if bid_per_conversion * opp.r > opp.c and opp.c <= remaining_budget:
        return AuctionOutcome(won=True, cost=opp.c, conversions_credit=opp.r)
    return AuctionOutcome(won=False, cost=0.0, conversions_credit=0.0)


def _episode_rngs(seed):
    ss = np.random.SeedSequence(seed)
    market_ss, conv_ss, noise_ss = ss.spawn(3)
    return (
        np.random.default_rng(market_ss),
        np.random.default_rng(conv_ss),
        np.random.default_rng(noise_ss),
    )


def run_episode(
    strategy,
    campaign: CampaignConfig,
    market: MarketParams,
    seed,
    opportunities: Optional[Sequence[AuctionOpportunity]] = None,
) -> EpisodeResult:
    """Simulate one campaign episode with the given bidding strategy.

    The request stream is grouped into cycles of market.cycle_size; the
    strategy is asked for one bid per cycle and the bid is held constant
    within it. The episode ends when the stream or the remaining budget
    is exhausted. Total spend never exceeds the budget: a win requires
    that its cost still fits.

    ``seed`` may be an int or a sequence of ints; all randomness derives
    from it. ``opportunities`` optionally replaces market sampling with a
    frozen request sequence (its length then bounds the stream).
    """
    total = market.total_opportunities
    cycle_size = market.cycle_size
    market_rng, conv_rng, noise_rng = _episode_rngs(seed)
    if opportunities is not None:
        if len(opportunities) < total:
            total = len(opportunities)
        all_r = np.asarray([o.r for o in opportunities], dtype=float)
        all_c = np.asarray([o.c for o in opportunities], dtype=float)
    else:
        # One upfront draw per episode keeps the per-cycle loop cheap.
        all_r = market_rng.lognormal(market.mu_r, market.sigma_r, total)
        all_c = market_rng.lognormal(market.mu_c, market.sigma_c, total)

    budget = campaign.budget
    state = CampaignState.fresh(budget, total, campaign.window_n)
    if hasattr(strategy, "reset"):
        strategy.reset()

    spent = 0.0
    impressions = 0
    credited = 0.0
    records: list[CycleRecord] = []
    pos = 0
    cycle = 0
    min_cost = _min_representable_cost(market)
    while pos < total and budget - spent >= min_cost:
        m = min(cycle_size, total - pos)
        n_next = m
        if market.request_noise > 0:
            n_next = max(1, round(m * noise_rng.lognormal(0.0, market.request_noise)))
        ts = target_spend(state, n_next)
        bid = max(0.0, float(strategy.next_bid(state, n_next)))

        r_arr = all_r[pos : pos + m]
        c_arr = all_c[pos : pos + m]

        win_mask = bid * r_arr > c_arr
        cycle_cost = float(np.dot(c_arr, win_mask))
        if spent + cycle_cost <= budget:
            wins = int(np.count_nonzero(win_mask))
            cycle_spend = cycle_cost
            win_r = None  # extracted lazily below only if needed
        else:
            # The budget binds inside this cycle: replay it request by
            # request so each win individually fits the remaining budget.
            wins = 0
            cycle_spend = 0.0
            kept = []
            for r, c, w in zip(r_arr, c_arr, win_mask):
                if w and spent + cycle_spend + c <= budget:
                    cycle_spend += c
                    wins += 1
                    kept.append(r)
            win_mask = None
            win_r = np.asarray(kept, dtype=float)

        if campaign.bernoulli_conversions:
            if win_r is None:
                win_r = r_arr[win_mask]
            draws = conv_rng.random(wins)
            cycle_conv = float((draws < np.minimum(win_r, 1.0)).sum())
        elif win_r is None:
            cycle_conv = float(np.dot(r_arr, win_mask))
        else:
            cycle_conv = float(win_r.sum())

        spent += cycle_spend
        impressions += wins
        credited += cycle_conv
        obs = PacingObservation(
            cycle_index=cycle,
            bid=bid,
            spend=cycle_spend,
            conversions=cycle_conv,
            requests=m,
            wins=wins,
        )
        state.record(obs)
        records.append(
            CycleRecord(
                cycle=cycle,
                bid=bid,
                target_spend=ts,
                spend=cycle_spend,
                conversions=cycle_conv,
                requests=m,
                wins=wins,
                remaining_after=budget - spent,
            )
        )
        pos += m
        cycle += 1

    return EpisodeResult(
        total_spend=spent,
        impressions=impressions,
        conversions=credited,
        budget=budget,
        cycles=records,
    )

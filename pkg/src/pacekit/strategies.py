"""MPC bidding strategies driven by isotonic bid landscapes.

At each pacing-cycle boundary the strategy receives the campaign state
(remaining budget, elapsed requests, recent cycle observations) and
returns the bid per conversion for the next cycle. The max-delivery
strategy inverts a bid-to-spend curve at the target spend; the cost-cap
strategy additionally constrains the predicted cost per conversion and
picks the largest feasible bid on a grid.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .isotonic import (
    InsufficientDataError,
    MonotoneCurve,
    UninvertibleCurveError,
    _pava_blocks,
    eval_curve,
    eval_curve_array,
    invert_curve,
)

# Guard against division by a zero observed spend in the fallback rule.
_SPEND_EPS = 1e-9

# A bid may at most quadruple from one cycle to the next. Inverting or
# extrapolating a near-flat noisy landscape segment (and the fallback
# after zero-spend cycles) otherwise jumps straight to the bid ceiling
# and buys an indiscriminate splurge cycle.
_MAX_GROWTH_PER_CYCLE = 4.0

# Scanning for the largest bid whose estimated cost per conversion fits
# the cap systematically selects optimistic estimation errors; shading
# the cap slightly keeps the realized average under the true cap.
DEFAULT_CAP_MARGIN = 0.05

# Cold-start bid multipliers: three distinct levels guarantee an
# invertible two-point landscape before the first inversion.
_COLD_START_FACTORS = (0.9, 1.0, 1.1)

UNCONSTRAINED_CAP = math.inf


class HorizonExhaustedError(ValueError):
    """No auction requests remain to pace against."""


@dataclass(frozen=True)
class PacingObservation:
    """Outcome of one pacing cycle at a fixed bid."""

    cycle_index: int
    bid: float
    spend: float
    conversions: float
    requests: int
    wins: int


@dataclass
class CampaignState:
    """Mutable per-episode campaign accounting shared with strategies."""

    initial_budget: float
    remaining_budget: float
    elapsed_requests: int
    total_requests: int
    cumulative_conversions: float
    window: deque  # of PacingObservation, bounded length
    cycles_completed: int = 0

    @classmethod
    def fresh(cls, budget: float, total_requests: int, window_n: int) -> "CampaignState":
        return cls(
            initial_budget=budget,
            remaining_budget=budget,
            elapsed_requests=0,
            total_requests=total_requests,
            cumulative_conversions=0.0,
            window=deque(maxlen=window_n),
        )

    def record(self, obs: PacingObservation) -> None:
        self.remaining_budget = max(0.0, self.remaining_budget - obs.spend)
        self.elapsed_requests += obs.requests
        self.cumulative_conversions += obs.conversions
        self.window.append(obs)
        self.cycles_completed += 1


def target_spend(state: CampaignState, predicted_requests: int) -> float:
    """Remaining budget prorated over the predicted share of remaining requests."""
    remaining = state.total_requests - state.elapsed_requests
    if remaining <= 0:
        raise HorizonExhaustedError("campaign horizon exhausted")
    if predicted_requests < 1:
        raise ValueError("predicted_requests must be >= 1")
    return state.remaining_budget * predicted_requests / remaining


def adjusted_cost_cap(state: CampaignState, budget: float, cost_cap: float) -> float:
    """Cap on next-interval cost per conversion that keeps the overall
    average under the original cap.

    Returns UNCONSTRAINED_CAP once enough conversions have accrued that
    any remaining spend keeps the total average under the cap.
    """
    if cost_cap <= 0:
        raise ValueError("cost_cap must be positive")
    denom = budget / cost_cap - state.cumulative_conversions
    if denom <= 0:
        return UNCONSTRAINED_CAP
    return state.remaining_budget / denom


def _clamp(bid: float, max_bid: float) -> float:
    return min(max(bid, 0.0), max_bid)


def _window_curve(window, attr: str):
    """Deduped, sorted isotonic curve over window observations of ``attr``.

    Fast path equivalent to pava(aggregate_duplicate_bids(...)):
    equal-bid cycles pool into weighted means first. Returns None when
    fewer than two distinct bids were observed or the fit collapses to a
    single level.
    """
    agg: dict[float, list[float]] = {}
    for obs in window:
        bid = obs.bid
        value = getattr(obs, attr)
        slot = agg.get(bid)
        if slot is None:
            agg[bid] = [value, 1.0]
        else:
            slot[0] += value
            slot[1] += 1.0
    if len(agg) < 2:
        return None
    bids = sorted(agg)
    values = [agg[b][0] / agg[b][1] for b in bids]
    weights = [agg[b][1] for b in bids]
    blocks = _pava_blocks(values, weights)
    if len(blocks) < 2:
        return None
    out_bids, out_values = [], []
    i = 0
    for value, _, count in blocks:
        out_bids.append(bids[i])
        out_values.append(value)
        i += count
    return MonotoneCurve(tuple(out_bids), tuple(out_values))


def _fallback_bid(state: CampaignState, ts: float, initial_bid: float, max_bid: float) -> float:
    """Proportional bid update for cycles where no landscape is available.

    Scales the last bid by the ratio of target to last observed spend,
    capped at a x4 increase per cycle; a dead (zero) previous bid
    restarts from the configured initial bid.
    """
    if not state.window:
        return _clamp(initial_bid, max_bid)
    last = state.window[-1]
    base = last.bid if last.bid > 0 else initial_bid
    ratio = min(ts / max(last.spend, _SPEND_EPS), _MAX_GROWTH_PER_CYCLE)
    return _clamp(base * ratio, max_bid)


def mpc_max_delivery_bid(
    state: CampaignState,
    predicted_requests: int,
    initial_bid: float,
    max_bid: float,
) -> float:
    """Bid for the next cycle that is predicted to spend the target amount.

    Fits a bid-to-spend curve to the observation window and inverts it at
    the target spend; degenerate landscapes (fewer than two distinct
    bids, fully merged or flat curves) fall back to the proportional
    update rule.
    """
    ts = target_spend(state, predicted_requests)
    if ts <= 0:
        return 0.0
    curve = _window_curve(state.window, "spend")
    if curve is None:
        return _fallback_bid(state, ts, initial_bid, max_bid)
    try:
        bid = invert_curve(curve, ts)
    except UninvertibleCurveError:
        return _fallback_bid(state, ts, initial_bid, max_bid)
    return _clamp(bid, max_bid)


def cost_per_conversion(spend, conversions):
    """Predicted cost per conversion with the zero-activity conventions.

    Zero conversions with positive spend violate any finite cap (+inf);
    zero spend with zero conversions realizes no cost at all (0).
    Scalar inputs return a float, arrays an ndarray.
    """
    scalar = np.isscalar(spend) and np.isscalar(conversions)
    spend_arr, conv_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(spend, dtype=float)),
        np.atleast_1d(np.asarray(conversions, dtype=float)),
    )
    out = np.zeros(spend_arr.shape)
    pos = conv_arr > 0
    out[pos] = spend_arr[pos] / conv_arr[pos]
    out[(~pos) & (spend_arr > 0)] = math.inf
    return float(out[0]) if scalar else out


def build_cost_curve(window):
    """Fit the bid-to-spend and bid-to-conversion curves from the window.

    Returns (f, g, h) where h(b) = f(b)/g(b) is the predicted cost per
    conversion. Raises InsufficientDataError when fewer than two distinct
    bids were observed or either curve collapses to a single breakpoint.
    """
    f = _window_curve(window, "spend")
    g = _window_curve(window, "conversions")
    if f is None or g is None:
        raise InsufficientDataError("insufficient distinct bids")

    def h(bid: float) -> float:
        return float(cost_per_conversion(eval_curve(f, bid), eval_curve(g, bid)))

    return f, g, h


def _grid_scan(
    f: MonotoneCurve,
    g: MonotoneCurve,
    ts: float,
    tc: float,
    max_bid: float,
    grid_step: float,
) -> float:
    """Largest grid bid whose predicted spend and cost-per-conversion are
    both feasible; 0.0 when no grid point qualifies.

    Scans 0, step, 2*step, ..., max_bid ascending and keeps the last
    feasible point, exactly as the printed search loop does, even if the
    cost constraint carves infeasible interior bands.
    """
    n = int(math.floor(max_bid / grid_step + 1e-9))
    grid = np.arange(n + 1) * grid_step
    if grid[-1] < max_bid:
        grid = np.append(grid, max_bid)
    fv = eval_curve_array(f, grid)
    gv = eval_curve_array(g, grid)
    hv = cost_per_conversion(fv, gv)
    feasible = (fv <= ts) & (hv <= tc)
    if not feasible.any():
        return 0.0
    return float(grid[np.nonzero(feasible)[0][-1]])


def mpc_cost_cap_bid(
    state: CampaignState,
    predicted_requests: int,
    budget: float,
    cost_cap: float,
    max_bid: float,
    grid_step: float,
    initial_bid: float,
    cap_margin: float = 0.0,
) -> float:
    """Largest bid predicted to respect both the target spend and the
    adjusted cost cap over the next cycle.

    ``cap_margin`` shades the adjusted cap by a relative fraction before
    the scan to offset the selection bias of picking the boundary bid.
    """
    ts = target_spend(state, predicted_requests)
    tc = adjusted_cost_cap(state, budget, cost_cap)
    if math.isfinite(tc):
        tc *= 1.0 - cap_margin
    if ts <= 0:
        return 0.0
    try:
        f, g, _ = build_cost_curve(state.window)
    except InsufficientDataError:
        return _cost_cap_fallback(state, ts, tc, initial_bid, max_bid)
    return _grid_scan(f, g, ts, tc, max_bid, grid_step)


def _cost_cap_fallback(
    state: CampaignState,
    ts: float,
    tc: float,
    initial_bid: float,
    max_bid: float,
) -> float:
    """Proportional fallback additionally capped for cost-cap consistency
    using the last observed cycle's realized cost per conversion."""
    bid = _fallback_bid(state, ts, initial_bid, max_bid)
    if state.window and math.isfinite(tc):
        last = state.window[-1]
        if last.spend > 0:
            if last.conversions <= 0:
                return 0.0
            cpa = last.spend / last.conversions
            if cpa > tc:
                base = last.bid if last.bid > 0 else initial_bid
                bid = min(bid, base * tc / cpa)
    return _clamp(bid, max_bid)


class _MpcBase:
    """Cold start, identifiability jitter and per-episode bookkeeping
    shared by both MPC strategies."""

    def __init__(self, initial_bid: float, max_bid: float, jitter: bool = True):
        if initial_bid <= 0:
            raise ValueError("initial_bid must be positive")
        self.initial_bid = initial_bid
        self.max_bid = max_bid
        self.jitter = jitter
        self.reset()

    def reset(self) -> None:
        self._cycle = 0
        self._jitter_up = True

    def next_bid(self, state: CampaignState, predicted_requests: int) -> float:
        ts = target_spend(state, predicted_requests)
        if ts <= 0:
            self._cycle += 1
            return 0.0
        if self._cycle < len(_COLD_START_FACTORS):
            bid = self.initial_bid * _COLD_START_FACTORS[self._cycle]
        else:
            bid = self._model_bid(state, predicted_requests)
            bid = self._trust_region(state, bid)
            bid = self._apply_jitter(state, bid)
        self._cycle += 1
        return _clamp(bid, self.max_bid)

    def _trust_region(self, state: CampaignState, bid: float) -> float:
        # Bound the per-cycle bid increase; downward moves stay free
        # (underspending is recoverable, a splurge cycle is not).
        if not state.window:
            return bid
        last = state.window[-1].bid
        base = last if last > 0 else self.initial_bid
        return min(bid, base * _MAX_GROWTH_PER_CYCLE)

    def _apply_jitter(self, state: CampaignState, bid: float) -> float:
        # Once every windowed bid is identical the landscape degenerates
        # to one point; a small alternating nudge keeps it identifiable.
        if not self.jitter or not state.window:
            return bid
        first = state.window[0].bid
        if any(obs.bid != first for obs in state.window):
            return bid
        factor = 1.05 if self._jitter_up else 0.95
        self._jitter_up = not self._jitter_up
        return bid * factor

    def _model_bid(self, state: CampaignState, predicted_requests: int) -> float:
        raise NotImplementedError


class MpcMaxDelivery(_MpcBase):
    """Budget-only MPC bidding: invert the spend landscape at the target."""

    name = "mpc"

    def _model_bid(self, state, predicted_requests):
        return mpc_max_delivery_bid(
            state, predicted_requests, self.initial_bid, self.max_bid
        )


class MpcCostCap(_MpcBase):
    """MPC bidding under a budget and an average cost-per-conversion cap."""

    name = "mpc_cost_cap"

    def __init__(
        self,
        initial_bid: float,
        max_bid: float,
        cost_cap: float,
        grid_step: float,
        jitter: bool = True,
        cap_margin: float = DEFAULT_CAP_MARGIN,
    ):
        if cost_cap <= 0:
            raise ValueError("cost_cap must be positive")
        self.cost_cap = cost_cap
        self.grid_step = grid_step
        self.cap_margin = cap_margin
        super().__init__(initial_bid, max_bid, jitter)

    def _model_bid(self, state, predicted_requests):
        return mpc_cost_cap_bid(
            state,
            predicted_requests,
            state.initial_budget,
            self.cost_cap,
            self.max_bid,
            self.grid_step,
            self.initial_bid,
            cap_margin=self.cap_margin,
        )

"""Weighted isotonic regression (PAVA) and monotone piecewise-linear curves.

The bid landscape models used by the MPC strategies are nondecreasing
curves fitted to noisy per-cycle observations. This module provides the
pool-adjacent-violators fit plus evaluation, extrapolation and inversion
of the resulting curve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class InsufficientDataError(ValueError):
    """Not enough points to fit or evaluate a curve."""


class UninvertibleCurveError(ValueError):
    """A flat curve cannot be inverted for a target off its level."""


@dataclass(frozen=True)
class BidValuePair:
    """One observed (bid, value) point with a positive merge weight."""

    bid: float
    value: float
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class MonotoneCurve:
    """Nondecreasing piecewise-linear map from bid to value.

    Breakpoint bids are strictly increasing and values nondecreasing;
    between breakpoints the curve interpolates linearly, outside it
    extrapolates along the boundary segment.
    """

    bids: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.bids) != len(self.values):
            raise ValueError("bids and values must have equal length")
        if not self.bids:
            raise InsufficientDataError("insufficient data")
        if any(b2 <= b1 for b1, b2 in zip(self.bids, self.bids[1:])):
            raise ValueError("breakpoint bids must be strictly increasing")
        if any(v2 < v1 for v1, v2 in zip(self.values, self.values[1:])):
            raise ValueError("breakpoint values must be nondecreasing")

    def __len__(self) -> int:
        return len(self.bids)

    @property
    def is_flat(self) -> bool:
        return self.values[0] == self.values[-1]


def _as_pairs(pairs: Iterable) -> list[BidValuePair]:
    out = []
    for p in pairs:
        if isinstance(p, BidValuePair):
            out.append(p)
        else:
            out.append(BidValuePair(*p))
    return out


def aggregate_duplicate_bids(pairs: Iterable) -> list[BidValuePair]:
    """Merge pairs sharing a bid into one weighted-mean pair, sorted by bid.

    Repeated pacing cycles reuse bids; pooling equal-bid points first
    preserves the weighted L2 objective and restores PAVA's
    strictly-increasing-bids precondition.
    """
    merged: dict[float, tuple[float, float]] = {}
    for p in _as_pairs(pairs):
        acc, w = merged.get(p.bid, (0.0, 0.0))
        merged[p.bid] = (acc + p.weight * p.value, w + p.weight)
    return [
        BidValuePair(bid, acc / w, w)
        for bid, (acc, w) in sorted(merged.items())
    ]


def _pava_blocks(values: Sequence[float], weights: Sequence[float]):
    """Run PAVA, returning merged blocks as (value, weight, count) lists.

    Uses the standard stack form: push each point, then merge backwards
    while the last two blocks violate monotonicity. Equivalent to the
    back-stepping loop formulation; each merge removes one block, so the
    total number of merges is at most n - 1.
    """
    blocks: list[list[float]] = []
    for v, w in zip(values, weights):
        blocks.append([float(v), float(w), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v2, w2, c2 = blocks.pop()
            v1, w1, c1 = blocks[-1]
            wt = w1 + w2
            blocks[-1] = [(w1 * v1 + w2 * v2) / wt, wt, c1 + c2]
    return blocks


def pava(pairs: Iterable) -> MonotoneCurve:
    """Weighted-mean isotonic fit of (bid, value) pairs sorted by bid.

    Adjacent order violators are merged into weighted averages until the
    value sequence is nondecreasing; the result is the weighted-L2
    optimal isotonic regression. Each merged block keeps its leftmost
    bid as the curve breakpoint.

    Raises InsufficientDataError on empty input and ValueError when bids
    are not strictly increasing (pool duplicates first with
    aggregate_duplicate_bids).
    """
    pts = _as_pairs(pairs)
    if not pts:
        raise InsufficientDataError("insufficient data")
    bids = [p.bid for p in pts]
    if any(b2 <= b1 for b1, b2 in zip(bids, bids[1:])):
        raise ValueError("bids must be strictly increasing")
    blocks = _pava_blocks([p.value for p in pts], [p.weight for p in pts])
    out_bids, out_values = [], []
    i = 0
    for value, _, count in blocks:
        out_bids.append(bids[i])
        out_values.append(value)
        i += count
    return MonotoneCurve(tuple(out_bids), tuple(out_values))


def isotonic_fit(pairs: Iterable) -> list[float]:
    """Per-point fitted values of the weighted isotonic regression."""
    pts = _as_pairs(pairs)
    if not pts:
        raise InsufficientDataError("insufficient data")
    blocks = _pava_blocks([p.value for p in pts], [p.weight for p in pts])
    fitted: list[float] = []
    for value, _, count in blocks:
        fitted.extend([value] * count)
    return fitted


def eval_curve(curve: MonotoneCurve, bid: float) -> float:
    """Evaluate the curve at a bid, extrapolating along boundary segments.

    Results are clamped below at zero; negative spend or conversion
    predictions are meaningless.
    """
    return float(eval_curve_array(curve, np.asarray([bid], dtype=float))[0])


def eval_curve_array(curve: MonotoneCurve, bids: np.ndarray) -> np.ndarray:
    """Vectorized eval_curve over an array of bids."""
    if len(curve) < 2:
        raise InsufficientDataError("curve needs at least 2 breakpoints")
    xs = np.asarray(curve.bids, dtype=float)
    ys = np.asarray(curve.values, dtype=float)
    bids = np.asarray(bids, dtype=float)
    out = np.interp(bids, xs, ys)
    lo = bids < xs[0]
    if lo.any():
        slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        out = np.where(lo, ys[0] + (bids - xs[0]) * slope, out)
    hi = bids > xs[-1]
    if hi.any():
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(hi, ys[-1] + (bids - xs[-1]) * slope, out)
    return np.maximum(out, 0.0)


def invert_curve(curve: MonotoneCurve, target: float) -> float:
    """Lowest bid at which the curve attains ``target``.

    Below the observed range the first segment is extrapolated, above it
    the last segment; interior targets are linearly inverted and flat
    plateaus resolve to their leftmost bid. The result is clamped below
    at zero. A target above a flat top segment is unreachable and comes
    back as +inf for the caller to clamp.

    Raises UninvertibleCurveError for a globally flat curve with a
    target off its level.
    """
    if len(curve) < 2:
        raise InsufficientDataError("curve needs at least 2 breakpoints")
    if target < 0:
        raise ValueError(f"target must be nonnegative, got {target}")
    xs = curve.bids
    ys = curve.values
    if curve.is_flat:
        if target == ys[0]:
            return xs[0]
        raise UninvertibleCurveError("uninvertible landscape")
    if target <= ys[0]:
        if target == ys[0]:
            return xs[0]
        denom = ys[1] - ys[0]
        if denom == 0:
            return 0.0  # flat first segment never reaches below its level
        return max(0.0, xs[0] + (target - ys[0]) / denom * (xs[1] - xs[0]))
    if target > ys[-1]:
        denom = ys[-1] - ys[-2]
        if denom == 0:
            return float("inf")  # flat top segment never reaches above
        return max(0.0, xs[-1] + (target - ys[-1]) / denom * (xs[-1] - xs[-2]))
    # Interior (or exactly the top value): leftmost segment containing target.
    j = int(np.searchsorted(np.asarray(ys), target, side="left"))
    if ys[j] == target:
        return xs[j]
    lo, hi = j - 1, j
    frac = (target - ys[lo]) / (ys[hi] - ys[lo])
    return max(0.0, xs[lo] + frac * (xs[hi] - xs[lo]))

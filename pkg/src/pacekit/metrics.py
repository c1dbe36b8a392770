"""Evaluation metrics over episode traces: budget utilization rate,
cost per view, and bid variance."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .auction import EpisodeResult


def bur(result: EpisodeResult, budget: float) -> float:
    """Delivered spend as a percentage of the allocated budget."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    return 100.0 * result.total_spend / budget


def cpv(result: EpisodeResult) -> Optional[float]:
    """Total spend per credited conversion; None when nothing converted."""
    if result.conversions <= 0:
        return None
    return result.total_spend / result.conversions


def bid_variance(bids: Sequence[float]) -> float:
    """Mean squared relative deviation of the per-cycle bids from their mean.

    Scale invariant: multiplying every bid by a positive constant leaves
    the value unchanged; zero iff the sequence is constant.
    """
    arr = np.asarray(list(bids), dtype=float)
    if arr.size == 0:
        raise ValueError("bid sequence must be nonempty")
    mean = arr.mean()
    if mean <= 0:
        raise ValueError("undefined BV")
    if arr.min() == arr.max():
        return 0.0  # exactly zero for constant sequences, no mean rounding dust
    return float(np.mean((1.0 - arr / mean) ** 2))


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        return float("nan"), float("nan")
    return float(arr.mean()), float(arr.std())

"""Shared independent oracles for the test suite.

These are deliberately naive reference implementations; they must stay
independent of the library code paths they check.
"""

from itertools import product

import numpy as np


def brute_force_isotonic(values, weights):
    """Weighted-L2 isotonic fit by enumerating consecutive-block partitions.

    Every partition of the points into consecutive blocks is scored with
    block values set to the weighted block means; partitions whose pooled
    means are not nondecreasing are discarded. The optimal isotonic
    regression is attained by one of the remaining partitions. Exponential
    in n, usable for n <= ~12.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = len(values)
    assert n >= 1
    best_sse = None
    best_fit = None
    # Each of the 2^(n-1) cut masks encodes block boundaries.
    for cuts in product([False, True], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        means = []
        for lo, hi in zip(bounds, bounds[1:]):
            w = weights[lo:hi]
            means.append(float(np.dot(w, values[lo:hi]) / w.sum()))
        if any(m2 < m1 for m1, m2 in zip(means, means[1:])):
            continue
        fit = np.concatenate(
            [np.full(hi - lo, m) for (lo, hi), m in zip(zip(bounds, bounds[1:]), means)]
        )
        sse = float(np.dot(weights, (fit - values) ** 2))
        if best_sse is None or sse < best_sse - 1e-12:
            best_sse = sse
            best_fit = fit
    return best_fit


def lp_style_constant_bid_search(bids, opportunities, budget):
    """Exhaustively replay a frozen opportunity stream for each constant bid.

    Returns per-bid (spend, conversions, wins) using the second-price
    win rule with the never-overspend guard, applied auction by auction.
    """
    rows = []
    for bid in bids:
        spend = 0.0
        conv = 0.0
        wins = 0
        for r, c in opportunities:
            if bid * r > c and spend + c <= budget:
                spend += c
                conv += r
                wins += 1
        rows.append((bid, spend, conv, wins))
    return rows

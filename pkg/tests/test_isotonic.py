import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_isotonic
from pacekit.isotonic import (
    BidValuePair,
    InsufficientDataError,
    MonotoneCurve,
    UninvertibleCurveError,
    aggregate_duplicate_bids,
    eval_curve,
    eval_curve_array,
    invert_curve,
    isotonic_fit,
    pava,
)


def curve(points):
    bids, values = zip(*points)
    return MonotoneCurve(tuple(float(b) for b in bids), tuple(float(v) for v in values))


class TestPava:
    def test_already_monotone_is_untouched(self):
        out = pava([(1, 1), (2, 2), (3, 3)])
        assert out.bids == (1, 2, 3)
        assert out.values == (1, 2, 3)

    def test_single_merge_hand_trace(self):
        # (5,3) violate -> mean 4 with weight 2; 4 <= 4 stops.
        out = pava([(1, 5), (2, 3), (3, 4)])
        assert out.bids == (1, 3)
        assert out.values == (4, 4)

    def test_full_collapse_hand_trace(self):
        # merge (3,2) -> 2.5 (w=2), then (2*2.5+1)/3 = 2 (w=3).
        out = pava([(1, 3), (2, 2), (3, 1)])
        assert out.bids == (1,)
        assert out.values == (2,)

    def test_empty_input_rejected(self):
        with pytest.raises(InsufficientDataError):
            pava([])

    def test_non_increasing_bids_rejected(self):
        with pytest.raises(ValueError):
            pava([(1, 1), (1, 2)])

    def test_weighted_merge(self):
        # weight 3 at value 4 dominates weight 1 at value 0: mean 3.
        out = pava([BidValuePair(1, 4, 3), BidValuePair(2, 0, 1)])
        assert out.values == (3.0,)

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        values = rng.integers(0, 6, n).astype(float)
        weights = rng.integers(1, 5, n).astype(float)
        pairs = [BidValuePair(float(i), v, w) for i, (v, w) in enumerate(zip(values, weights))]
        expected = brute_force_isotonic(values, weights)
        got = isotonic_fit(pairs)
        assert np.allclose(got, expected, atol=1e-9)

    @given(
        st.lists(
            st.tuples(st.integers(0, 5), st.integers(1, 4)),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_mean_preservation_and_monotone_output(self, rows):
        pairs = [BidValuePair(float(i), float(v), float(w)) for i, (v, w) in enumerate(rows)]
        fitted = isotonic_fit(pairs)
        assert all(b >= a for a, b in zip(fitted, fitted[1:]))
        w = np.array([p.weight for p in pairs])
        v = np.array([p.value for p in pairs])
        assert np.dot(w, fitted) == pytest.approx(np.dot(w, v), abs=1e-9)

    @given(
        st.lists(
            st.tuples(st.integers(0, 5), st.integers(1, 4)),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=100, deadline=None)
    def test_idempotent(self, rows):
        pairs = [BidValuePair(float(i), float(v), float(w)) for i, (v, w) in enumerate(rows)]
        first = pava(pairs)
        # Expand the fitted curve back to weighted pairs and refit.
        blocks = [BidValuePair(b, v) for b, v in zip(first.bids, first.values)]
        again = pava(blocks)
        assert again.bids == first.bids
        assert again.values == first.values

    def test_linear_merge_count(self):
        # A strictly decreasing sequence forces n-1 merges; it must still
        # run in linear time.
        n = 200_000
        pairs = [(float(i), float(n - i)) for i in range(n)]
        out = pava(pairs)
        assert len(out) == 1

    def test_aggregate_duplicate_bids(self):
        pairs = aggregate_duplicate_bids([(2, 4), (1, 1), (2, 8), (1, 3)])
        assert [(p.bid, p.value, p.weight) for p in pairs] == [
            (1, 2.0, 2.0),
            (2, 6.0, 2.0),
        ]

    def test_aggregate_respects_weights(self):
        pairs = aggregate_duplicate_bids([BidValuePair(1, 0, 1), BidValuePair(1, 4, 3)])
        assert pairs[0].value == 3.0
        assert pairs[0].weight == 4.0


class TestEvalCurve:
    def test_interior_interpolation(self):
        assert eval_curve(curve([(1, 10), (3, 30)]), 2) == pytest.approx(20)

    def test_above_range_extrapolation(self):
        assert eval_curve(curve([(1, 10), (3, 30)]), 4) == pytest.approx(40)

    def test_breakpoint_identity(self):
        assert eval_curve(curve([(1, 10), (3, 30)]), 1) == pytest.approx(10)

    def test_below_range_clamps_at_zero(self):
        assert eval_curve(curve([(1, 10), (3, 30)]), -5) == 0.0

    def test_single_breakpoint_rejected(self):
        with pytest.raises(InsufficientDataError):
            eval_curve(curve([(1, 10)]), 1)

    def test_array_matches_scalar(self):
        c = curve([(1, 5), (2, 5), (4, 9)])
        bids = np.linspace(-1, 6, 29)
        vec = eval_curve_array(c, bids)
        assert np.allclose(vec, [eval_curve(c, b) for b in bids])


class TestInvertCurve:
    def test_interior(self):
        assert invert_curve(curve([(1, 10), (3, 30)]), 20) == pytest.approx(2)

    def test_above_range(self):
        assert invert_curve(curve([(1, 10), (3, 30)]), 40) == pytest.approx(4)

    def test_below_range(self):
        assert invert_curve(curve([(1, 10), (3, 30)]), 5) == pytest.approx(0.5)

    def test_below_range_clamps_at_zero(self):
        assert invert_curve(curve([(1, 10), (3, 30)]), 0) == 0.0

    def test_flat_plateau_returns_lowest_bid(self):
        c = curve([(0, 0), (2, 5), (4, 5), (6, 9)])
        assert invert_curve(c, 5) == 2

    def test_globally_flat_off_level_errors(self):
        with pytest.raises(UninvertibleCurveError):
            invert_curve(curve([(1, 5), (2, 5)]), 7)

    def test_globally_flat_at_level_returns_first_bid(self):
        assert invert_curve(curve([(1, 5), (2, 5)]), 5) == 1

    def test_flat_top_unreachable_target_is_inf(self):
        c = curve([(0, 0), (2, 5), (4, 5)])
        assert invert_curve(c, 8) == float("inf")

    def test_negative_target_rejected(self):
        with pytest.raises(ValueError):
            invert_curve(curve([(1, 10), (3, 30)]), -1)

    @pytest.mark.parametrize("seed", range(20))
    def test_round_trip_interior(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        bids = np.cumsum(rng.uniform(0.1, 2.0, n))
        values = np.cumsum(rng.uniform(0.1, 3.0, n))
        c = MonotoneCurve(tuple(bids), tuple(values))
        for t in rng.uniform(values[0], values[-1], 20):
            assert eval_curve(c, invert_curve(c, t)) == pytest.approx(t, abs=1e-9)

    def test_inversion_monotone_in_target(self):
        c = curve([(0, 0), (1, 4), (2, 4), (5, 10)])
        targets = np.linspace(0, 12, 60)
        bids = [invert_curve(c, t) for t in targets]
        assert all(b2 >= b1 for b1, b2 in zip(bids, bids[1:]))

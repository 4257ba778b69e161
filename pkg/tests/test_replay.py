"""Replay: LTV reconstruction, frontier-split dLTV stats, sigma fitting."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liqsim.engine import SlippageModel, q_opt
from liqsim.policy import is_toxic, uc_frontier
from liqsim.portfolio import Portfolio
from liqsim.prices import PriceSeries
from liqsim.replay import (
    DeltaLtvSplit,
    LiquidationRecord,
    ReplayError,
    above_frontier_split,
    classify_constraint_bound,
    dltv_distribution,
    event_ltv_changes,
    events_to_usd,
    fit_sigma,
    load_events_csv,
    reconstruct_ltv,
    sigma_summary,
)

T0 = 1669104000


def series(closes):
    ts = T0 + 60 * np.arange(len(closes), dtype=np.int64)
    return PriceSeries(ts, np.asarray(closes, dtype=float))


def portfolio(c=100.0, b=97.0):
    return Portfolio({"USDC": c}, {"CRV": b}, {"USDC": 0.89})


def record(minute, repaid, incentive=0.045, seized=None):
    seized = (1.0 + incentive) * repaid if seized is None else seized
    return LiquidationRecord(T0 + 60 * minute, repaid, seized, incentive)


class TestReconstructLtv:
    def test_no_events_flat_prices(self):
        trace = reconstruct_ltv(portfolio(), series([2.0] * 5), [])
        assert len(trace) == 5
        assert all(v == pytest.approx(0.97) for _, v in trace)

    def test_single_event_arithmetic(self):
        trace = reconstruct_ltv(portfolio(), series([1.0, 1.0, 1.0]),
                                [record(1, 10.0)])
        values = [v for _, v in trace]
        assert values[0] == pytest.approx(0.97)
        assert values[-1] == pytest.approx(0.971524, abs=1e-6)

    def test_price_move_scales_ltv(self):
        trace = reconstruct_ltv(portfolio(100.0, 60.0), series([1.0, 1.5]), [])
        assert trace[0][1] == pytest.approx(0.60)
        assert trace[1][1] == pytest.approx(0.90)

    def test_overdrain_names_offending_record(self):
        with pytest.raises(ReplayError, match="event #1.*over-drains"):
            reconstruct_ltv(portfolio(5.0, 97.0), series([1.0, 1.0]),
                            [record(1, 10.0)])

    def test_unsorted_events_rejected(self):
        events = [record(2, 1.0), record(1, 1.0)]
        with pytest.raises(ReplayError, match="sorted"):
            reconstruct_ltv(portfolio(), series([1.0] * 4), events)

    def test_event_outside_span_rejected(self):
        with pytest.raises(ReplayError, match="span"):
            reconstruct_ltv(portfolio(), series([1.0, 1.0]), [record(10, 1.0)])

    def test_event_uses_price_in_force(self):
        # Debt revalues with the multiplier before the event's USD repayment
        # is converted to quantity: repaying at a doubled price removes half
        # the tokens.
        trace = reconstruct_ltv(portfolio(300.0, 100.0), series([1.0, 2.0, 2.0]),
                                [record(1, 50.0)])
        # After x2: debt 200 USD. Repay 50 USD -> 150 USD of debt remains.
        assert trace[-1][1] == pytest.approx(150.0 / (300.0 - 52.25))

    def test_one_pass_equals_event_by_event(self):
        # Folding events through a flat price window one at a time matches
        # the single-pass walk.
        events = [record(1, 5.0), record(2, 7.0), record(3, 4.0)]
        full = reconstruct_ltv(portfolio(), series([1.0] * 5), events)

        b, c = 97.0, 100.0
        for ev in events:
            b -= ev.repaid_usd
            c -= ev.seized_usd
        assert full[-1][1] == pytest.approx(b / c, rel=1e-12)


class TestDltvDistribution:
    def test_healthy_events_fall_negative_below_frontier(self):
        trace = reconstruct_ltv(portfolio(100.0, 92.0), series([1.0] * 3),
                                [record(1, 10.0)])
        split = dltv_distribution(trace, [record(1, 10.0)], uc_frontier(0.045))
        assert split.above.size == 0
        assert split.below.size == 1
        assert split.below[0] < 0.0

    def test_toxic_events_fall_positive_above_frontier(self):
        events = [record(1, 10.0)]
        trace = reconstruct_ltv(portfolio(100.0, 97.0), series([1.0] * 3), events)
        split = dltv_distribution(trace, events, uc_frontier(0.045))
        assert split.below.size == 0
        assert split.above.size == 1
        assert split.above[0] > 0.0

    def test_zero_change_event(self):
        # At the frontier exactly, the step leaves LTV unchanged.
        i = 0.045
        frontier = uc_frontier(i)
        p = portfolio(100.0, 100.0 * frontier)
        events = [record(1, 10.0, incentive=i)]
        trace = reconstruct_ltv(p, series([1.0] * 3), events)
        split = dltv_distribution(trace, events, frontier)
        rel = np.concatenate([split.below, split.above])[0]
        assert rel == pytest.approx(0.0, abs=1e-12)

    def test_histogram_shapes(self):
        split = DeltaLtvSplit(np.array([-0.01, -0.02]), np.array([0.015]))
        edges, below, above = split.histograms(bins=10)
        assert edges.shape == (11,)
        assert below.sum() == 2
        assert above.sum() == 1

    @given(
        b=st.floats(50.0, 99.0),
        repaid=st.floats(0.5, 20.0),
        i=st.floats(0.0, 0.2),
    )
    @settings(max_examples=200)
    def test_sign_agrees_with_toxicity(self, b, repaid, i):
        p = portfolio(100.0, b)
        events = [record(1, repaid, incentive=i)]
        trace = reconstruct_ltv(p, series([1.0] * 3), events)
        (_, init, fin), = event_ltv_changes(trace, events)
        if is_toxic(init, i):
            assert fin > init
        elif init < uc_frontier(i):
            assert fin < init


class TestFitSigma:
    def test_inverts_q_opt_example(self):
        sigmas = fit_sigma([record(1, 3.718e6)], gamma=0.003, liquidity=190e6)
        assert sigmas[0] == pytest.approx(1.0, rel=1e-3)

    def test_halving_repaid_doubles_sigma(self):
        one = fit_sigma([record(1, 2e6)])[0]
        half = fit_sigma([record(1, 1e6)])[0]
        assert half == pytest.approx(2 * one, rel=1e-12)

    def test_unprofitable_incentive_goes_negative(self):
        sigmas = fit_sigma([record(1, 1e6, incentive=0.0)], gamma=0.003)
        assert sigmas[0] < 0.0

    def test_zero_repaid_skipped_with_nan(self):
        sigmas = fit_sigma([record(1, 0.0, seized=0.0), record(2, 1e6)])
        assert math.isnan(sigmas[0])
        assert not math.isnan(sigmas[1])

    @given(sigma=st.floats(0.01, 600.0))
    @settings(max_examples=300)
    def test_inverse_identity_with_q_opt(self, sigma):
        m = SlippageModel(gamma=0.003, sigma=sigma, liquidity=190e6)
        q = q_opt(m, 0.045)
        fitted = fit_sigma([record(1, q)], gamma=0.003, liquidity=190e6)[0]
        assert fitted == pytest.approx(sigma, rel=1e-9)


class TestClassifyConstraintBound:
    def test_closing_factor_bound(self):
        p = portfolio(1000.0, 97.0)
        events = [record(1, 0.5 * 97.0)]
        flags = classify_constraint_bound(p, series([1.0] * 3), events, 0.5)
        assert flags == [True]

    def test_collateral_bound(self):
        p = portfolio(100.0, 970.0)
        events = [record(1, 100.0 / 1.045)]
        flags = classify_constraint_bound(p, series([1.0] * 3), events, 0.5)
        assert flags == [True]

    def test_interior_optimum_not_flagged(self):
        p = portfolio(1000.0, 900.0)
        events = [record(1, 37.0)]
        flags = classify_constraint_bound(p, series([1.0] * 3), events, 0.5)
        assert flags == [False]


class TestSigmaSummary:
    def test_single_side_median(self):
        below, above, full = sigma_summary([1.0, 2.0, 3.0], [False] * 3)
        assert below == 2.0
        assert math.isnan(above)
        assert full == 2.0

    def test_lower_middle_convention(self):
        _, _, med = sigma_summary([1.0, 2.0, 3.0, 4.0], [False, False, True, True])
        assert med == 2.0

    def test_mixed_split_independent_medians(self):
        sigmas = [1.0, 5.0, 9.0, 2.0, 4.0, 6.0]
        split = [False, False, False, True, True, True]
        below, above, full = sigma_summary(sigmas, split)
        assert below == 5.0
        assert above == 4.0
        assert full == 4.0  # sorted [1,2,4,5,6,9] -> lower middle

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sigma_summary([], [])

    def test_nan_entries_ignored(self):
        below, above, full = sigma_summary([math.nan, 3.0], [False, False])
        assert below == 3.0 and full == 3.0
        assert math.isnan(above)


class TestAboveFrontierSplit:
    def test_flags_follow_ltv(self):
        # First event below the frontier, second one after a pump above it.
        p = portfolio(100.0, 92.0)
        events = [record(1, 2.0), record(3, 2.0)]
        prices = series([1.0, 1.0, 1.10, 1.10, 1.10])
        flags = above_frontier_split(p, prices, events, uc_frontier(0.045))
        assert flags == [False, True]


class TestEventCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text(
            "timestamp,repaid_usd,seized_usd,incentive,block\n"
            f"{T0 + 60},10.0,10.45,0.045,123\n"
            f"{T0 + 120},5.0,5.225,0.045,\n")
        events = load_events_csv(str(path))
        assert len(events) == 2
        assert events[0].block == 123
        assert events[1].block is None
        assert events[0].seized_usd == pytest.approx(10.45)

    def test_malformed_row_reports_number(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text(
            "timestamp,repaid_usd,seized_usd,incentive\n"
            f"{T0},1.0,1.045,0.045\n"
            f"{T0 + 60},oops,1.0,0.045\n")
        with pytest.raises(ReplayError, match="row 2"):
            load_events_csv(str(path))

    def test_seized_below_repaid_rejected(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text(
            "timestamp,repaid_usd,seized_usd,incentive\n"
            f"{T0},10.0,9.0,0.045\n")
        with pytest.raises(ReplayError, match="row 1"):
            load_events_csv(str(path))

    def test_missing_file(self):
        with pytest.raises(ReplayError, match="gone.csv"):
            load_events_csv("gone.csv")

    def test_token_unit_conversion(self):
        prices = series([2.0, 4.0, 4.0])
        events = [LiquidationRecord(T0 + 60, 10.0, 50.0, 0.045)]
        out = events_to_usd(events, prices)
        assert out[0].repaid_usd == pytest.approx(40.0)  # 10 tokens at close 4.0
        assert out[0].seized_usd == pytest.approx(50.0)  # stable side unchanged

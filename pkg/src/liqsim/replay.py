"""Replay of recorded liquidation events against a recorded price series:
LTV history reconstruction, per-event LTV-change statistics split by the
undercollateralization frontier, and empirical slippage-factor fitting.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .portfolio import Portfolio
from .prices import PriceSeries

logger = logging.getLogger(__name__)


class ReplayError(ValueError):
    """Inconsistent replay inputs (bad rows, over-draining events)."""


@dataclass(frozen=True)
class LiquidationRecord:
    """One recorded liquidation call: realized USD amounts plus its incentive."""

    timestamp: int
    repaid_usd: float
    seized_usd: float
    incentive: float
    block: int | None = None

    def __post_init__(self) -> None:
        if self.repaid_usd < 0 or not math.isfinite(self.repaid_usd):
            raise ReplayError(f"repaid_usd must be >= 0, got {self.repaid_usd}")
        if self.seized_usd < self.repaid_usd:
            raise ReplayError(
                f"seized_usd {self.seized_usd} below repaid_usd {self.repaid_usd}")
        if self.incentive < 0:
            raise ReplayError(f"incentive must be >= 0, got {self.incentive}")


def load_events_csv(path: str) -> list[LiquidationRecord]:
    """Read liquidation records (``timestamp,repaid_usd,seized_usd,incentive[,block]``).

    Malformed rows raise :class:`ReplayError` naming the offending row.
    """
    records: list[LiquidationRecord] = []
    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise ReplayError(f"events file not found: {path}") from None
    with fh:
        reader = csv.DictReader(fh)
        required = {"timestamp", "repaid_usd", "seized_usd", "incentive"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ReplayError(f"{path}: expected columns {sorted(required)}")
        for row_no, row in enumerate(reader, start=1):
            try:
                records.append(LiquidationRecord(
                    timestamp=int(float(row["timestamp"])),
                    repaid_usd=float(row["repaid_usd"]),
                    seized_usd=float(row["seized_usd"]),
                    incentive=float(row["incentive"]),
                    block=int(row["block"]) if row.get("block") not in (None, "") else None,
                ))
            except (ReplayError, TypeError, ValueError) as exc:
                raise ReplayError(f"{path}: bad event at data row {row_no}: {exc}") from None
    return records


def events_to_usd(events: list[LiquidationRecord], prices: PriceSeries) -> list[LiquidationRecord]:
    """Convert token-quantity records to USD amounts via the price series.

    The repaid side is valued at the debt asset's close at (or before) each
    event's timestamp; the seized side is stable collateral, pinned at 1.
    """
    out = []
    for ev in events:
        idx = int(np.searchsorted(prices.timestamps, ev.timestamp, side="right")) - 1
        if idx < 0:
            raise ReplayError(f"event at ts={ev.timestamp} precedes the price series")
        px = float(prices.closes[idx])
        out.append(LiquidationRecord(ev.timestamp, ev.repaid_usd * px,
                                     ev.seized_usd, ev.incentive, ev.block))
    return out


@dataclass(frozen=True)
class _Step:
    kind: str  # "tick" | "event"
    timestamp: int
    ltv_before: float
    ltv_after: float
    event_index: int = -1
    coll_before: float = 0.0
    debt_usd_before: float = 0.0


def _walk(p0: Portfolio, prices: PriceSeries, events: list[LiquidationRecord]):
    """Merge price ticks and events in timestamp order (tick first on exact
    ties) and yield one :class:`_Step` per state change.

    State lives in quantity space: collateral is stable USD, debt is held in
    start-USD units and revalued through the close/close_0 multiplier, so a
    repaid USD amount removes quantity at the price in force when it lands.
    """
    if len(prices) == 0:
        raise ReplayError("empty price series")
    ts_list = [ev.timestamp for ev in events]
    if ts_list != sorted(ts_list):
        raise ReplayError("events must be sorted by timestamp")
    if events and (events[0].timestamp < int(prices.timestamps[0])
                   or events[-1].timestamp > int(prices.timestamps[-1])):
        raise ReplayError("event timestamps fall outside the price series span")

    coll = p0.total_collateral
    if coll <= 0:
        raise ReplayError("replay needs positive initial collateral")
    debt_q = p0.total_debt
    close0 = float(prices.closes[0])
    mult = 1.0

    def cur_ltv() -> float:
        return math.inf if coll <= 0 else (debt_q * mult) / coll

    def apply_event(idx: int) -> _Step:
        nonlocal coll, debt_q
        ev = events[idx]
        before = cur_ltv()
        coll_before, debt_before = coll, debt_q * mult
        if ev.seized_usd > coll * (1.0 + 1e-9):
            raise ReplayError(
                f"event #{idx + 1} at ts={ev.timestamp} over-drains collateral: "
                f"seized {ev.seized_usd} > collateral {coll}")
        if ev.repaid_usd > debt_before * (1.0 + 1e-9):
            raise ReplayError(
                f"event #{idx + 1} at ts={ev.timestamp} repays more than outstanding debt")
        coll = max(0.0, coll - ev.seized_usd)
        debt_q = max(0.0, debt_q - ev.repaid_usd / mult)
        return _Step("event", ev.timestamp, before, cur_ltv(), idx, coll_before, debt_before)

    ev_idx = 0
    for ts, close in zip(prices.timestamps.tolist(), prices.closes.tolist()):
        while ev_idx < len(events) and events[ev_idx].timestamp < ts:
            yield apply_event(ev_idx)
            ev_idx += 1
        before = cur_ltv()
        mult = close / close0
        yield _Step("tick", ts, before, cur_ltv())
        while ev_idx < len(events) and events[ev_idx].timestamp == ts:
            yield apply_event(ev_idx)
            ev_idx += 1


def reconstruct_ltv(
    p0: Portfolio, prices: PriceSeries, events: list[LiquidationRecord]
) -> list[tuple[int, float]]:
    """Rebuild the borrower's LTV history: price ticks revalue the debt side,
    events remove repaid debt and seized collateral; one trace point is
    emitted after every change."""
    return [(s.timestamp, s.ltv_after) for s in _walk(p0, prices, events)]


@dataclass
class DeltaLtvSplit:
    """Per-event relative LTV changes, split by which side of the frontier
    the event started on."""

    below: np.ndarray
    above: np.ndarray

    def histograms(self, bins: int = 30) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Common-edge histograms (edges, counts_below, counts_above)."""
        both = np.concatenate([self.below, self.above])
        if both.size == 0:
            edges = np.linspace(-1.0, 1.0, bins + 1)
        else:
            lo, hi = float(both.min()), float(both.max())
            if lo == hi:
                lo, hi = lo - 1e-6, hi + 1e-6
            edges = np.linspace(lo, hi, bins + 1)
        below_counts, _ = np.histogram(self.below, bins=edges)
        above_counts, _ = np.histogram(self.above, bins=edges)
        return edges, below_counts, above_counts


def event_ltv_changes(
    trace: list[tuple[int, float]], events: list[LiquidationRecord]
) -> list[tuple[int, float, float]]:
    """Per-event (timestamp, LTV_init, LTV_fin) recovered from a trace.

    ``trace`` must come from :func:`reconstruct_ltv` over the same events:
    within each timestamp the price tick (if any) precedes the event
    entries, which appear in event order.
    """
    if len(trace) < len(events):
        raise ReplayError("trace has fewer entries than events; inputs not aligned")
    by_ts: dict[int, list[int]] = {}
    for idx, (ts, _) in enumerate(trace):
        by_ts.setdefault(ts, []).append(idx)
    ev_count: dict[int, int] = {}
    for ev in events:
        ev_count[ev.timestamp] = ev_count.get(ev.timestamp, 0) + 1
    # Within a shared timestamp the event entries are the last ev_count ones.
    seen: dict[int, int] = {}
    out = []
    for ev in events:
        group = by_ts.get(ev.timestamp)
        n_ev = ev_count[ev.timestamp]
        if group is None or len(group) < n_ev:
            raise ReplayError(f"no trace entry for event at ts={ev.timestamp}")
        rank = seen.get(ev.timestamp, 0)
        seen[ev.timestamp] = rank + 1
        idx = group[len(group) - n_ev + rank]
        if idx == 0:
            raise ReplayError("event entry cannot be the first trace point")
        out.append((ev.timestamp, trace[idx - 1][1], trace[idx][1]))
    return out


def dltv_distribution(
    trace: list[tuple[int, float]],
    events: list[LiquidationRecord],
    frontier: float,
) -> DeltaLtvSplit:
    """Relative LTV change (LTV_fin/LTV_init) - 1 per event, bucketed by
    whether the event started below or above the UC frontier."""
    below, above = [], []
    for _, ltv_init, ltv_fin in event_ltv_changes(trace, events):
        rel = ltv_fin / ltv_init - 1.0
        (above if ltv_init > frontier else below).append(rel)
    return DeltaLtvSplit(below=np.asarray(below), above=np.asarray(above))


def fit_sigma(
    events: list[LiquidationRecord],
    gamma: float = 0.003,
    liquidity: float = 190e6,
) -> list[float]:
    """Empirical linear slippage factor per event, assuming the recorded
    repay amount was the liquidator's optimum.

    Returns one value per event (NaN for zero-repaid records, which are
    skipped with a warning). Records whose incentive cannot cover the
    trading fee produce negative factors and are flagged.
    """
    out: list[float] = []
    for k, ev in enumerate(events):
        if ev.repaid_usd == 0:
            logger.warning("event #%d: zero repaid amount, skipping sigma fit", k + 1)
            out.append(math.nan)
            continue
        gross = (1.0 + ev.incentive) ** 2
        value = (gross * (1.0 - gamma) ** 2 - 1.0) / (4.0 * gross) * liquidity / ev.repaid_usd
        if value < 0:
            logger.warning(
                "event #%d: unprofitable-incentive record (i=%g), sigma=%g",
                k + 1, ev.incentive, value)
        out.append(value)
    return out


def classify_constraint_bound(
    p0: Portfolio,
    prices: PriceSeries,
    events: list[LiquidationRecord],
    closing_factor: float = 0.5,
    tolerance: float = 0.01,
) -> list[bool]:
    """Flag events whose repay amount sat on a constraint rather than the
    profit optimum: within ``tolerance`` (relative) of the closing-factor cap
    c*B or of collateral exhaustion C/(1+i) at event time."""
    flags: list[bool] = [False] * len(events)
    for step in _walk(p0, prices, events):
        if step.kind != "event":
            continue
        ev = events[step.event_index]
        cap_close = closing_factor * step.debt_usd_before
        cap_coll = step.coll_before / (1.0 + ev.incentive)
        near_close = cap_close > 0 and abs(ev.repaid_usd - cap_close) <= tolerance * cap_close
        near_coll = cap_coll > 0 and abs(ev.repaid_usd - cap_coll) <= tolerance * cap_coll
        flags[step.event_index] = bool(near_close or near_coll)
    return flags


def above_frontier_split(
    p0: Portfolio,
    prices: PriceSeries,
    events: list[LiquidationRecord],
    frontier: float,
) -> list[bool]:
    """True per event when the borrower's LTV just before it exceeded the frontier."""
    flags: list[bool] = [False] * len(events)
    for step in _walk(p0, prices, events):
        if step.kind == "event":
            flags[step.event_index] = step.ltv_before > frontier
    return flags


def sigma_summary(
    sigmas: list[float], split: list[bool]
) -> tuple[float, float, float]:
    """Medians of the below-frontier subset, the above-frontier subset, and
    the full set; ``split[k]`` is True for events above the frontier.

    The median of an even-length list is its lower-middle element. NaN
    entries (skipped fits) are ignored; an empty subset yields NaN.
    """
    if not sigmas:
        raise ValueError("no slippage factors to summarize")
    if len(split) != len(sigmas):
        raise ValueError("split mask must align with sigmas")
    usable = [(s, up) for s, up in zip(sigmas, split) if not math.isnan(s)]
    if not usable:
        raise ValueError("no usable slippage factors to summarize")
    all_vals = [s for s, _ in usable]
    before = [s for s, up in usable if not up]
    after = [s for s, up in usable if up]
    return _median_lower(before), _median_lower(after), _median_lower(all_vals)


def _median_lower(values: list[float]) -> float:
    if not values:
        return math.nan
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]

"""Bundled demo data: a synthetic CRV-like minute series with an engineered
pump-and-crash spike, plus a small hand-built liquidation-event fixture.

``python -m liqsim.demo <dir>`` regenerates the files shipped under demo/.
"""

from __future__ import annotations

import csv
import os
import sys

import numpy as np

from .prices import PriceSeries

DEMO_SEED = 20221122
T0 = 1669104000  # arbitrary fixed epoch anchor, 60 s bars

# Spike layout within the 7-day synthetic series (minute offsets).
SPIKE_CANDLE = 5060       # single +14.5% minute that jumps LTV past the frontier
SPIKE_TAIL = 3            # follow-through minutes of +2%
CRASH_LEN = 120           # minutes of forced sell-off after the pump
CRASH_DRIFT = -0.0052     # per-minute log drift during the crash (~-46% total)

BASE_VOL = 0.003          # per-minute log-return sigma, CRV-like
BASE_DRIFT = -1e-6        # slight bear bias, motivates reversal augmentation


def crv_like_series(n_minutes: int = 10080, seed: int = DEMO_SEED) -> PriceSeries:
    """Synthetic minute closes: noisy random walk plus the engineered spike."""
    rng = np.random.default_rng(seed)
    r = BASE_DRIFT + BASE_VOL * rng.standard_normal(n_minutes - 1)
    r[SPIKE_CANDLE] = np.log(1.145)
    for k in range(1, SPIKE_TAIL + 1):
        r[SPIKE_CANDLE + k] = np.log(1.02)
    crash = slice(SPIKE_CANDLE + SPIKE_TAIL + 1, SPIKE_CANDLE + SPIKE_TAIL + 1 + CRASH_LEN)
    r[crash] = CRASH_DRIFT + 2.0 * BASE_VOL * rng.standard_normal(CRASH_LEN)
    closes = 0.60 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    ts = T0 + 60 * np.arange(n_minutes, dtype=np.int64)
    return PriceSeries(ts, closes)


def replay_fixture() -> tuple[PriceSeries, list[dict]]:
    """A 60-minute deterministic price path and six liquidation records.

    Built so that, from an initial portfolio of 100 USDC collateral against
    88 CRV debt (LTV 0.88), the first three events land below the UC
    frontier and the last three above it. Seized amounts follow the 4.5%
    incentive exactly.
    """
    n = 60
    r = np.zeros(n - 1)
    r[:20] = np.log(1.0025)        # slow grind up, LTV drifts 0.88 -> ~0.925
    r[20] = np.log(1.08)           # gap candle: LTV jumps past the frontier
    r[21:35] = np.log(1.001)
    r[35:] = np.log(0.98)          # correction
    closes = 0.60 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    ts = T0 + 60 * np.arange(n, dtype=np.int64)
    series = PriceSeries(ts, closes)

    incentive = 0.045
    events = []
    # (minute, repaid USD): small healthy bites, then toxic ones after the gap.
    for minute, repaid in [(8, 1.5), (12, 2.0), (16, 2.0), (24, 2.5), (28, 2.5), (32, 3.0)]:
        events.append({
            "timestamp": int(ts[minute]),
            "repaid_usd": repaid,
            "seized_usd": round((1.0 + incentive) * repaid, 10),
            "incentive": incentive,
            "block": 16000000 + minute,
        })
    return series, events


def _write_ohlcv(series: PriceSeries, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "open", "high", "low", "close", "volume"])
        closes = series.closes
        opens = np.concatenate([[closes[0]], closes[:-1]])
        for k in range(len(series)):
            o, c = opens[k], closes[k]
            w.writerow([int(series.timestamps[k]), repr(float(o)),
                        repr(float(max(o, c))), repr(float(min(o, c))),
                        repr(float(c)), "0"])


SIMULATE_TOML = """\
# Demo scenario: USDC-collateralized CRV loan stressed by bootstrapped
# trajectories from the bundled synthetic series.

[scenario]
collateral = { USDC = 90e6 }
debt = { CRV = 76.5e6 }

[scenario.liq_thresholds]
USDC = 0.89

[slippage]
gamma = 0.003
sigma = 1.0
liquidity = 1.9e8

[[policies]]
kind = "toxic_baseline"

[[policies]]
kind = "halt_above_uc"

[[policies]]
kind = "dynamic_incentive"

[[policies]]
kind = "dynamic_incentive_closing"

[trajectories]
source = "historical"
csv = "crv_synthetic.csv"
count = 200
horizon = 1440
mode = "window"

[run]
seed = 7
workers = 1
out_dir = "out"
"""

REPLAY_TOML = """\
# Demo replay: six recorded liquidations against a 60-minute price path.
# Liquidity is toy-scale to match the fixture portfolio, so fitted slippage
# factors land in an O(1) range.

[replay]
prices_csv = "avi_prices.csv"
events_csv = "events.csv"
incentive = 0.045
gamma = 0.003
liquidity = 190.0
closing_factor = 0.5

[scenario]
collateral = { USDC = 100.0 }
debt = { CRV = 88.0 }

[scenario.liq_thresholds]
USDC = 0.89

[run]
out_dir = "out_replay"
"""


def write_demo_files(target_dir: str) -> dict[str, str]:
    """Write the bundled demo inputs into ``target_dir``; returns the paths."""
    os.makedirs(target_dir, exist_ok=True)
    paths = {}

    series = crv_like_series()
    paths["crv_synthetic"] = os.path.join(target_dir, "crv_synthetic.csv")
    _write_ohlcv(series, paths["crv_synthetic"])

    replay_series, events = replay_fixture()
    paths["avi_prices"] = os.path.join(target_dir, "avi_prices.csv")
    _write_ohlcv(replay_series, paths["avi_prices"])

    paths["events"] = os.path.join(target_dir, "events.csv")
    with open(paths["events"], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["timestamp", "repaid_usd", "seized_usd",
                                           "incentive", "block"])
        w.writeheader()
        w.writerows(events)

    paths["config"] = os.path.join(target_dir, "config.toml")
    with open(paths["config"], "w") as fh:
        fh.write(SIMULATE_TOML)

    paths["replay_config"] = os.path.join(target_dir, "replay.toml")
    with open(paths["replay_config"], "w") as fh:
        fh.write(REPLAY_TOML)
    return paths


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "demo"
    for name, path in write_demo_files(out).items():
        print(f"{name}: {path}")

"""Price history ingestion and Monte Carlo trajectory generation.

Historical minute closes become log returns, from which 24h windows are
bootstrap-sampled; each sampled window is also emitted in reverse order to
cancel the directional bias of the source period. A seeded synthetic
geometric-random-walk generator is provided for fixtures and demos.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

OHLCV_COLUMNS = ("timestamp", "open", "high", "low", "close", "volume")


class PriceDataError(ValueError):
    """Malformed or unusable price input."""


@dataclass(frozen=True)
class PriceSeries:
    """Minute-level close series; timestamps are epoch seconds, ascending."""

    timestamps: np.ndarray
    closes: np.ndarray
    ohlcv: pd.DataFrame | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype=np.int64)
        px = np.asarray(self.closes, dtype=float)
        if ts.shape != px.shape or ts.ndim != 1:
            raise PriceDataError("timestamps and closes must be 1-D and aligned")
        if len(ts) and np.any(np.diff(ts) <= 0):
            raise PriceDataError("timestamps must be strictly increasing")
        if np.any(~np.isfinite(px)) or np.any(px <= 0):
            raise PriceDataError("closes must be finite and strictly positive")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "closes", px)

    def __len__(self) -> int:
        return len(self.closes)


@dataclass(frozen=True)
class Trajectory:
    """One simulated price path: per-step multiplicative factors for the debt asset."""

    id: int
    factors: np.ndarray
    reversed_flag: bool = False

    def __post_init__(self) -> None:
        f = np.ascontiguousarray(self.factors, dtype=float)
        if np.any(~np.isfinite(f)) or np.any(f <= 0):
            raise PriceDataError(f"trajectory {self.id}: factors must be finite and > 0")
        object.__setattr__(self, "factors", f)

    def __len__(self) -> int:
        return len(self.factors)


def load_price_csv(path: str) -> PriceSeries:
    """Load an OHLCV CSV (``timestamp,open,high,low,close,volume``).

    Timestamps may be epoch seconds or ISO-8601; the format is auto-detected.
    Open/high/low/volume are parsed and retained but only closes drive the
    simulation.
    """
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise PriceDataError(f"price file not found: {path}") from None
    except Exception as exc:
        raise PriceDataError(f"cannot parse price file {path}: {exc}") from None
    df.columns = [c.strip().lower() for c in df.columns]
    missing = [c for c in OHLCV_COLUMNS if c not in df.columns]
    if missing:
        raise PriceDataError(f"{path}: missing columns {missing}")
    ts = _parse_timestamps(df["timestamp"], path)
    closes = pd.to_numeric(df["close"], errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(closes) | (closes <= 0))
    if len(bad):
        raise PriceDataError(f"{path}: bad close at data row {bad[0] + 1}")
    return PriceSeries(ts, closes, ohlcv=df)


def _parse_timestamps(col: pd.Series, path: str) -> np.ndarray:
    numeric = pd.to_numeric(col, errors="coerce")
    if not numeric.isna().any():
        return numeric.to_numpy(dtype=np.int64)
    parsed = pd.to_datetime(col, errors="coerce", utc=True)
    if parsed.isna().any():
        row = int(parsed.isna().to_numpy().argmax()) + 1
        raise PriceDataError(f"{path}: unparseable timestamp at data row {row}")
    return (parsed.astype(np.int64) // 1_000_000_000).to_numpy()


def log_returns(s: PriceSeries) -> np.ndarray:
    """Per-step log returns ln(close_t / close_{t-1}); length n-1."""
    if len(s) < 2:
        raise PriceDataError("need at least two prices for returns")
    return np.diff(np.log(s.closes))


def sample_trajectories(
    returns: np.ndarray,
    n: int,
    horizon: int,
    seed: int,
    mode: str = "window",
) -> list[Trajectory]:
    """Bootstrap ``n`` return windows of length ``horizon`` plus their reversals.

    ``mode="window"`` draws contiguous windows at uniformly random start
    offsets (overlap allowed), preserving intraday autocorrelation;
    ``mode="iid"`` resamples single returns with replacement instead. Each
    drawn window is followed by its element-wise reversal, so 2n
    trajectories come back, ids 2k (forward) and 2k+1 (reversed). Fixed
    seeds reproduce the set bit for bit.
    """
    r = np.asarray(returns, dtype=float)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if mode not in ("window", "iid"):
        raise ValueError(f"mode must be 'window' or 'iid', got {mode!r}")
    if mode == "window" and len(r) < horizon:
        raise PriceDataError(f"return series length {len(r)} is shorter than horizon {horizon}")
    if mode == "iid" and len(r) == 0:
        raise PriceDataError("iid resampling needs a non-empty return series")
    rng = np.random.default_rng(seed)
    out: list[Trajectory] = []
    for k in range(n):
        if mode == "window":
            start = int(rng.integers(0, len(r) - horizon + 1))
            window = r[start : start + horizon]
        else:
            window = r[rng.integers(0, len(r), size=horizon)]
        factors = np.exp(window)
        out.append(Trajectory(2 * k, factors))
        out.append(Trajectory(2 * k + 1, factors[::-1], reversed_flag=True))
    return out


def synthetic_gbm(
    mu: float, sigma_step: float, horizon: int, n: int, seed: int
) -> list[Trajectory]:
    """Seeded geometric-random-walk paths: factors exp(mu - sigma^2/2 + sigma z)."""
    if sigma_step < 0:
        raise ValueError(f"sigma_step must be >= 0, got {sigma_step}")
    if horizon < 1 or n < 1:
        raise ValueError("horizon and n must be >= 1")
    rng = np.random.default_rng(seed)
    drift = mu - 0.5 * sigma_step**2
    out = []
    for k in range(n):
        z = rng.standard_normal(horizon)
        out.append(Trajectory(k, np.exp(drift + sigma_step * z)))
    return out

"""Readers for the simulator's documented output schemas.

Every loader validates the column set up front and reports exactly what is
missing, so a schema mismatch fails with a usable diagnostic instead of a
KeyError deep inside matplotlib.
"""

from __future__ import annotations

import json
import os

import pandas as pd


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def _read_csv(path: str, required: set[str]) -> pd.DataFrame:
    if not os.path.exists(path):
        raise SchemaError(f"input file not found: {path}")
    try:
        df = pd.read_csv(path)
    except Exception as exc:
        raise SchemaError(f"cannot parse {path}: {exc}") from None
    missing = sorted(required - set(df.columns))
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; found {sorted(df.columns)}")
    return df


def read_ltv_trace(path: str) -> pd.DataFrame:
    """ltv_trace.csv: timestamp,ltv."""
    return _read_csv(path, {"timestamp", "ltv"})


def read_prices(path: str) -> pd.DataFrame:
    """OHLCV price CSV (timestamp,open,high,low,close,volume)."""
    return _read_csv(path, {"timestamp", "close"})


def read_series(path: str) -> pd.DataFrame:
    """series_<policy>.csv: step,mean,lower,upper."""
    return _read_csv(path, {"step", "mean", "lower", "upper"})


def read_final_samples(path: str) -> pd.DataFrame:
    """final_samples.csv: trajectory_id plus one column per policy."""
    df = _read_csv(path, {"trajectory_id"})
    if len(df.columns) < 2:
        raise SchemaError(f"{path}: no policy columns next to trajectory_id")
    return df


def read_sigma_fit(path: str) -> pd.DataFrame:
    """sigma_fit.csv: per-event sigma with frontier/inclusion flags."""
    return _read_csv(path, {"event", "sigma", "above_frontier", "included"})


def read_report(path: str) -> dict:
    """report.json emitted by the simulator."""
    if not os.path.exists(path):
        raise SchemaError(f"input file not found: {path}")
    with open(path) as fh:
        doc = json.load(fh)
    if "policies" not in doc:
        raise SchemaError(f"{path}: missing 'policies' section")
    return doc


def series_label(path: str) -> str:
    """Policy label from a series_<policy>.csv filename."""
    stem = os.path.splitext(os.path.basename(path))[0]
    return stem[len("series_"):] if stem.startswith("series_") else stem

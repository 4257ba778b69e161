"""Experiment configuration files: TOML schema, validation, and assembly of
scenario objects. Unknown keys are rejected so typos fail fast, before any
compute."""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import DUST_USD, SlippageModel
from .montecarlo import ScenarioConfig, TrajectorySource
from .policy import PolicyConfig, PolicyKind, uc_frontier
from .portfolio import Portfolio
from .prices import PriceDataError, PriceSeries, load_price_csv
from .replay import LiquidationRecord, events_to_usd, load_events_csv


class ConfigError(ValueError):
    """Configuration file violates the schema."""


def _require_table(doc: dict, key: str, where: str = "") -> dict:
    val = doc.get(key)
    if not isinstance(val, dict):
        raise ConfigError(f"missing or invalid table [{where}{key}]")
    return val


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")


def _number(table: dict, key: str, where: str, default=None) -> float:
    val = table.get(key, default)
    if val is None:
        raise ConfigError(f"[{where}] requires key '{key}'")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[{where}].{key} must be a number, got {val!r}")
    return float(val)


def _integer(table: dict, key: str, where: str, default=None) -> int:
    val = table.get(key, default)
    if val is None:
        raise ConfigError(f"[{where}] requires key '{key}'")
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"[{where}].{key} must be an integer, got {val!r}")
    return val


def _string(table: dict, key: str, where: str, default=None) -> str:
    val = table.get(key, default)
    if val is None:
        raise ConfigError(f"[{where}] requires key '{key}'")
    if not isinstance(val, str):
        raise ConfigError(f"[{where}].{key} must be a string, got {val!r}")
    return val


def _asset_map(table: dict, key: str, where: str) -> dict[str, float]:
    val = table.get(key)
    if not isinstance(val, dict) or not val:
        raise ConfigError(f"[{where}].{key} must be a non-empty table of asset -> value")
    out = {}
    for asset, amount in val.items():
        if isinstance(amount, bool) or not isinstance(amount, (int, float)):
            raise ConfigError(f"[{where}].{key}.{asset} must be a number")
        out[str(asset)] = float(amount)
    return out


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def config_digest(doc: dict) -> str:
    """Stable sha256 of the parsed config, for report provenance."""
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=str).encode()
    ).hexdigest()[:16]


def _parse_portfolio(doc: dict) -> Portfolio:
    scenario = _require_table(doc, "scenario")
    _reject_unknown(scenario, {"collateral", "debt", "liq_thresholds"}, "scenario")
    collateral = _asset_map(scenario, "collateral", "scenario")
    debt = _asset_map(scenario, "debt", "scenario")
    thresholds = _asset_map(scenario, "liq_thresholds", "scenario")
    try:
        return Portfolio(collateral, debt, thresholds)
    except ValueError as exc:
        raise ConfigError(f"[scenario]: {exc}") from None


def _parse_slippage(doc: dict) -> SlippageModel:
    table = doc.get("slippage", {})
    if not isinstance(table, dict):
        raise ConfigError("[slippage] must be a table")
    _reject_unknown(table, {"gamma", "sigma", "liquidity"}, "slippage")
    try:
        return SlippageModel(
            gamma=_number(table, "gamma", "slippage", 0.003),
            sigma=_number(table, "sigma", "slippage", 1.0),
            liquidity=_number(table, "liquidity", "slippage", 190e6),
        )
    except ValueError as exc:
        raise ConfigError(f"[slippage]: {exc}") from None


_POLICY_KEYS = {"kind", "name", "i0", "c0", "epsilon", "ltv_liq"}


def _parse_policies(doc: dict) -> tuple[PolicyConfig, ...]:
    entries = doc.get("policies")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("at least one [[policies]] entry is required")
    out = []
    for k, entry in enumerate(entries):
        where = f"policies[{k}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"[{where}] must be a table")
        _reject_unknown(entry, _POLICY_KEYS, where)
        kind_str = _string(entry, "kind", where)
        try:
            kind = PolicyKind(kind_str)
        except ValueError:
            raise ConfigError(
                f"[{where}].kind must be one of "
                f"{[k.value for k in PolicyKind]}, got {kind_str!r}") from None
        try:
            out.append(PolicyConfig(
                kind=kind,
                i0=_number(entry, "i0", where, 0.045),
                c0=_number(entry, "c0", where, 0.5),
                epsilon=_number(entry, "epsilon", where, 1e-4),
                ltv_liq=_number(entry, "ltv_liq", where, 0.89),
                name=_string(entry, "name", where, kind_str),
            ))
        except ValueError as exc:
            raise ConfigError(f"[{where}]: {exc}") from None
    names = [p.name for p in out]
    if len(set(names)) != len(names):
        raise ConfigError(f"policy names must be unique, got {names}")
    return tuple(out)


def _parse_trajectories(doc: dict, base_dir: str) -> TrajectorySource:
    table = _require_table(doc, "trajectories")
    _reject_unknown(
        table, {"source", "horizon", "count", "csv", "mode", "mu", "sigma_step"},
        "trajectories")
    source = _string(table, "source", "trajectories")
    horizon = _integer(table, "horizon", "trajectories", 1440)
    count = _integer(table, "count", "trajectories")
    try:
        if source == "historical":
            csv_name = _string(table, "csv", "trajectories")
            series = load_price_csv(os.path.join(base_dir, csv_name))
            return TrajectorySource.historical(
                series, count=count, horizon=horizon,
                mode=_string(table, "mode", "trajectories", "window"))
        if source == "synthetic":
            return TrajectorySource(
                source="synthetic", horizon=horizon, count=count,
                mu=_number(table, "mu", "trajectories", 0.0),
                sigma_step=_number(table, "sigma_step", "trajectories", 0.0))
    except (ConfigError, PriceDataError):
        raise  # ingestion problems keep their own type for exit-code mapping
    except ValueError as exc:
        raise ConfigError(f"[trajectories]: {exc}") from None
    raise ConfigError(
        f"[trajectories].source must be 'historical' or 'synthetic', got {source!r}")


@dataclass(frozen=True)
class RunOptions:
    seed: int = 0
    workers: int = 1
    out_dir: str = "out"
    dust: float = DUST_USD


def _parse_run(doc: dict, base_dir: str) -> RunOptions:
    table = doc.get("run", {})
    if not isinstance(table, dict):
        raise ConfigError("[run] must be a table")
    _reject_unknown(table, {"seed", "workers", "out_dir", "dust"}, "run")
    out_dir = _string(table, "out_dir", "run", "out")
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)
    return RunOptions(
        seed=_integer(table, "seed", "run", 0),
        workers=_integer(table, "workers", "run", 1),
        out_dir=out_dir,
        dust=_number(table, "dust", "run", DUST_USD),
    )


@dataclass
class SimulatePlan:
    """Everything cmd_simulate needs: the scenario plus output options."""

    scenario: ScenarioConfig
    out_dir: str
    config_hash: str


def load_simulate_config(
    path: str,
    seed: int | None = None,
    workers: int | None = None,
    out_dir: str | None = None,
) -> SimulatePlan:
    doc = _load_toml(path)
    _reject_unknown(
        doc, {"scenario", "slippage", "policies", "trajectories", "run"}, "<root>")
    base_dir = os.path.dirname(os.path.abspath(path))
    run = _parse_run(doc, base_dir)
    scenario = ScenarioConfig(
        portfolio=_parse_portfolio(doc),
        policies=_parse_policies(doc),
        slippage=_parse_slippage(doc),
        trajectories=_parse_trajectories(doc, base_dir),
        seed=run.seed if seed is None else seed,
        dust=run.dust,
        workers=run.workers if workers is None else workers,
    )
    return SimulatePlan(
        scenario=scenario,
        out_dir=run.out_dir if out_dir is None else out_dir,
        config_hash=config_digest(doc),
    )


_REPLAY_KEYS = {
    "prices_csv", "events_csv", "incentive", "frontier", "gamma", "liquidity",
    "closing_factor", "constraint_tolerance", "include_constraint_bound",
    "events_in_token_units",
}


@dataclass
class ReplayPlan:
    """Inputs for cmd_replay / cmd_fit_slippage."""

    portfolio: Portfolio
    prices: PriceSeries
    events: list[LiquidationRecord]
    frontier: float
    gamma: float
    liquidity: float
    closing_factor: float
    constraint_tolerance: float
    include_constraint_bound: bool
    out_dir: str
    config_hash: str


def load_replay_config(path: str, out_dir: str | None = None) -> ReplayPlan:
    doc = _load_toml(path)
    _reject_unknown(doc, {"replay", "scenario", "run"}, "<root>")
    base_dir = os.path.dirname(os.path.abspath(path))
    table = _require_table(doc, "replay")
    _reject_unknown(table, _REPLAY_KEYS, "replay")

    incentive = _number(table, "incentive", "replay", 0.045)
    if incentive < 0:
        raise ConfigError("[replay].incentive must be >= 0")
    frontier = table.get("frontier")
    if frontier is None:
        frontier = uc_frontier(incentive)
    elif isinstance(frontier, bool) or not isinstance(frontier, (int, float)):
        raise ConfigError("[replay].frontier must be a number")

    token_units = table.get("events_in_token_units", False)
    include_all = table.get("include_constraint_bound", False)
    if not isinstance(token_units, bool) or not isinstance(include_all, bool):
        raise ConfigError("[replay] boolean keys must be true/false")

    run = _parse_run(doc, base_dir)
    prices = load_price_csv(os.path.join(base_dir, _string(table, "prices_csv", "replay")))
    events = load_events_csv(os.path.join(base_dir, _string(table, "events_csv", "replay")))
    if token_units:
        events = events_to_usd(events, prices)

    return ReplayPlan(
        portfolio=_parse_portfolio(doc),
        prices=prices,
        events=events,
        frontier=float(frontier),
        gamma=_number(table, "gamma", "replay", 0.003),
        liquidity=_number(table, "liquidity", "replay", 190e6),
        closing_factor=_number(table, "closing_factor", "replay", 0.5),
        constraint_tolerance=_number(table, "constraint_tolerance", "replay", 0.01),
        include_constraint_bound=include_all,
        out_dir=run.out_dir if out_dir is None else out_dir,
        config_hash=config_digest(doc),
    )

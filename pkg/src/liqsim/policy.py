"""Liquidation policies: the undercollateralization frontier, toxicity
classification, and the dynamic incentive / closing-factor schedules."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class PolicyKind(str, enum.Enum):
    """The four liquidation policy variants under comparison."""

    TOXIC_BASELINE = "toxic_baseline"
    HALT_ABOVE_UC = "halt_above_uc"
    DYNAMIC_INCENTIVE = "dynamic_incentive"
    DYNAMIC_INCENTIVE_CLOSING = "dynamic_incentive_closing"


def uc_frontier(i: float) -> float:
    """LTV above which any liquidation at incentive ``i`` worsens the borrower.

    Equals 1/(1+i); at or below it a liquidation step leaves LTV no worse.
    """
    if i < 0:
        raise ValueError(f"liquidation incentive must be >= 0, got {i}")
    return 1.0 / (1.0 + i)


def is_toxic(ltv: float, i: float) -> bool:
    """True when a liquidation at incentive ``i`` would strictly raise LTV."""
    if ltv < 0 or i < 0:
        raise ValueError("ltv and incentive must be >= 0")
    return ltv > uc_frontier(i)


def dynamic_incentive(ltv: float, i0: float, epsilon: float) -> float:
    """LTV-dependent incentive max[min[i0, 1/ltv - 1 - epsilon], 0].

    Stays strictly below the level at which liquidations turn toxic and
    vanishes entirely once the portfolio is undercollateralized.
    """
    if ltv <= 0:
        raise ValueError(f"ltv must be > 0, got {ltv}")
    return max(min(i0, 1.0 / ltv - 1.0 - epsilon), 0.0)


def dynamic_closing(ltv: float, c0: float, ltv_liq: float) -> float:
    """Linear closing-factor schedule from c0 at ltv_liq up to 1 at LTV >= 1.

    Below the liquidation threshold (where liquidations are disallowed
    anyway) the schedule is clamped to c0 for totality.
    """
    if ltv_liq >= 1.0:
        raise ValueError(f"ltv_liq must be < 1, got {ltv_liq}")
    if ltv < ltv_liq:
        return c0
    span = 1.0 - ltv_liq
    # Ratios are formed before multiplying so the endpoints come out exact:
    # at ltv == ltv_liq the first ratio is exactly 1, at ltv == 1 it is 0.
    return min(c0 * ((1.0 - ltv) / span) + (ltv - ltv_liq) / span, 1.0)


@dataclass(frozen=True)
class PolicyConfig:
    """A liquidation policy variant plus its parameters.

    ``i0`` is the maximal (baseline: static) incentive, ``c0`` the minimum
    (baseline: static) closing factor, ``epsilon`` the safety margin of the
    dynamic incentive, and ``ltv_liq`` the liquidation threshold used by the
    closing-factor schedule. For a specific portfolio the effective
    threshold is the collateral-weighted value from
    :func:`liqsim.portfolio.liq_threshold`; ``ltv_liq`` is the configured
    scenario default.
    """

    kind: PolicyKind = PolicyKind.TOXIC_BASELINE
    i0: float = 0.045
    c0: float = 0.5
    epsilon: float = 1e-4
    ltv_liq: float = 0.89
    name: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.i0 < 1.0:
            raise ValueError(f"i0 must be in [0,1), got {self.i0}")
        if not 0.0 < self.c0 <= 1.0:
            raise ValueError(f"c0 must be in (0,1], got {self.c0}")
        if not 0.0 <= self.epsilon <= 0.01:
            raise ValueError(f"epsilon must be in [0, 0.01], got {self.epsilon}")
        if not 0.0 < self.ltv_liq < 1.0:
            raise ValueError(f"ltv_liq must be in (0,1), got {self.ltv_liq}")
        if not self.name:
            object.__setattr__(self, "name", self.kind.value)


def step_parameters(
    cfg: PolicyConfig, ltv: float, ltv_liq: float | None = None
) -> tuple[bool, float, float]:
    """Resolve (allow, incentive, closing factor) for a portfolio at ``ltv``.

    ``ltv_liq`` overrides the configured threshold with the portfolio's
    collateral-weighted value when the caller has one.
    """
    threshold = cfg.ltv_liq if ltv_liq is None else ltv_liq
    liquidatable = ltv > threshold

    if cfg.kind is PolicyKind.TOXIC_BASELINE:
        return liquidatable, cfg.i0, cfg.c0
    if cfg.kind is PolicyKind.HALT_ABOVE_UC:
        allow = liquidatable and ltv <= uc_frontier(cfg.i0)
        return allow, cfg.i0, cfg.c0
    if cfg.kind is PolicyKind.DYNAMIC_INCENTIVE:
        return liquidatable, dynamic_incentive(ltv, cfg.i0, cfg.epsilon), cfg.c0
    if cfg.kind is PolicyKind.DYNAMIC_INCENTIVE_CLOSING:
        return (
            liquidatable,
            dynamic_incentive(ltv, cfg.i0, cfg.epsilon),
            dynamic_closing(ltv, cfg.c0, threshold),
        )
    raise AssertionError(f"unhandled policy kind {cfg.kind}")  # pragma: no cover

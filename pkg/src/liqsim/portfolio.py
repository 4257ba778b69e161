"""Borrower portfolio state: collateral/debt accounting, LTV, and shortfall.

All amounts are USD values. Position sizes are carried in "start-USD"
quantity units (one unit = one USD at unit price multiplier), so a
portfolio revalued under a :class:`PriceState` composes correctly with
liquidations, which remove quantity rather than rescaling base values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

# Position values below this are treated as fully drained; keeps
# liquidation cascades from chasing dust forever.
VALUE_EPSILON = 1e-9


class FullyRepossessedError(ValueError):
    """LTV requested on a portfolio whose collateral is exhausted."""


def _check_values(name: str, values: Mapping[str, float]) -> None:
    for asset, v in values.items():
        if not asset:
            raise ValueError(f"{name} asset id must be non-empty")
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name}[{asset}] must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class PriceState:
    """Per-asset USD price multipliers relative to scenario start."""

    multipliers: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for asset, m in self.multipliers.items():
            if not math.isfinite(m) or m <= 0:
                raise ValueError(f"multiplier for {asset} must be finite and > 0, got {m}")

    def get(self, asset: str) -> float:
        """Multiplier for ``asset``; assets without an entry are pinned at 1.0."""
        return self.multipliers.get(asset, 1.0)


@dataclass(frozen=True)
class Portfolio:
    """Single-borrower position: USD values per collateral and debt asset.

    ``liq_thresholds`` holds the per-collateral-asset liquidation LTV
    threshold (fraction in (0, 1)); the portfolio-level threshold is the
    collateral-weighted average, see :func:`liq_threshold`.
    """

    collateral: Mapping[str, float]
    debt: Mapping[str, float]
    liq_thresholds: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_values("collateral", self.collateral)
        _check_values("debt", self.debt)
        for asset, t in self.liq_thresholds.items():
            if not 0.0 < t < 1.0:
                raise ValueError(f"liq_thresholds[{asset}] must be in (0,1), got {t}")

    @property
    def total_collateral(self) -> float:
        return sum(self.collateral.values())

    @property
    def total_debt(self) -> float:
        return sum(self.debt.values())


def ltv(p: Portfolio) -> float:
    """Loan-to-value ratio B/C of the portfolio.

    Raises :class:`FullyRepossessedError` when the collateral side is
    exhausted (the distinguished end-state of a liquidation spiral), so
    callers never see a bare division error.
    """
    c = p.total_collateral
    if c <= 0.0:
        raise FullyRepossessedError("portfolio has no collateral left")
    return p.total_debt / c


def liq_threshold(p: Portfolio) -> float:
    """Portfolio liquidation threshold: collateral-weighted per-asset thresholds."""
    c = p.total_collateral
    if c <= 0.0 or not p.collateral:
        raise ValueError("liquidation threshold needs a non-empty collateral side")
    acc = 0.0
    for asset, value in p.collateral.items():
        try:
            t = p.liq_thresholds[asset]
        except KeyError:
            raise ValueError(f"no liquidation threshold configured for {asset}") from None
        acc += value * t
    return acc / c


def shortfall(p: Portfolio) -> float:
    """Instantaneous bad debt max(0, B - C): loans not covered by collateral."""
    return max(0.0, p.total_debt - p.total_collateral)


def apply_prices(p: Portfolio, base: Portfolio, s: PriceState) -> Portfolio:
    """Revalue positions under the multipliers in ``s``.

    ``base`` carries the position sizes in quantity units (start-USD at
    unit multipliers); each returned value is ``base value x multiplier``.
    Liquidations must be folded into ``base`` as quantity removals (see
    :func:`deflate`) so that already-seized amounts are not revalued.
    ``p`` supplies the threshold map and is otherwise superseded.
    """
    collateral = {a: _round_dust(v * s.get(a)) for a, v in base.collateral.items()}
    debt = {a: _round_dust(v * s.get(a)) for a, v in base.debt.items()}
    return Portfolio(collateral, debt, p.liq_thresholds or base.liq_thresholds)


def deflate(p: Portfolio, s: PriceState) -> Portfolio:
    """Inverse of :func:`apply_prices`: recover quantity units from USD values."""
    collateral = {a: v / s.get(a) for a, v in p.collateral.items()}
    debt = {a: v / s.get(a) for a, v in p.debt.items()}
    return Portfolio(collateral, debt, p.liq_thresholds)


def scaled(p: Portfolio, collateral_factor: float, debt_factor: float) -> Portfolio:
    """Proportionally scale both sides; used to apply aggregate liquidations."""
    collateral = {a: _round_dust(v * collateral_factor) for a, v in p.collateral.items()}
    debt = {a: _round_dust(v * debt_factor) for a, v in p.debt.items()}
    return Portfolio(collateral, debt, p.liq_thresholds)


def _round_dust(v: float) -> float:
    return 0.0 if v < VALUE_EPSILON else v

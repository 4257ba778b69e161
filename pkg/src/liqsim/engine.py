"""Liquidation execution: liquidator sizing under linear slippage and the
per-step cascade that applies repay/seize events to a portfolio.

A liquidation repays ``q`` of debt and seizes ``(1+i)q`` of collateral; the
liquidator funds ``q`` with a free flash loan and swaps ``x`` of the seized
collateral back, where ``x (1 - s(x)) = q`` under the slippage curve
``s(x) = gamma + sigma x / L``. Profit is ``(1+i)q - x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .policy import PolicyConfig, step_parameters
from .portfolio import VALUE_EPSILON, Portfolio, liq_threshold, scaled

DUST_USD = 1e-6


class SwapInfeasibleError(ValueError):
    """Requested repay amount cannot be funded at the model's liquidity."""


@dataclass(frozen=True)
class SlippageModel:
    """Linear slippage: trading fee ``gamma``, slope ``sigma``, liquidity ``liquidity`` (USD)."""

    gamma: float = 0.003
    sigma: float = 1.0
    liquidity: float = 190e6

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 0.05:
            raise ValueError(f"gamma must be in [0, 0.05), got {self.gamma}")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not self.liquidity > 0:
            raise ValueError(f"liquidity must be > 0, got {self.liquidity}")


@dataclass(frozen=True)
class LiquidationEvent:
    """One executed repay/seize pair plus the liquidator's economics."""

    repaid: float
    seized: float
    incentive_used: float
    closing_factor_used: float
    swap_amount: float
    profit: float
    ltv_before: float
    ltv_after: float


def slippage(m: SlippageModel, x):
    """Net slippage fraction for a swap of size ``x`` (USD). Accepts arrays."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0):
        raise ValueError("swap amount must be >= 0")
    out = m.gamma + m.sigma * x_arr / m.liquidity
    return out if isinstance(x, np.ndarray) else float(out)


def swap_for(m: SlippageModel, q):
    """Swap size ``x`` that nets ``q`` after slippage: x (1 - s(x)) = q.

    Uses the cancellation-free form of the quadratic root. Accepts arrays.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0):
        raise ValueError("repay amount must be >= 0")
    one_minus_g = 1.0 - m.gamma
    if m.sigma == 0.0:
        x = q_arr / one_minus_g
    else:
        u = 4.0 * m.sigma * q_arr / (m.liquidity * one_minus_g**2)
        if np.any(u > 1.0 + 1e-12):
            raise SwapInfeasibleError("swap infeasible at this liquidity")
        u = np.minimum(u, 1.0)
        x = 2.0 * q_arr / (one_minus_g * (1.0 + np.sqrt(1.0 - u)))
    return x if isinstance(q, np.ndarray) else float(x)


def profit(m: SlippageModel, i: float, q):
    """Liquidator profit (1+i) q - x(q) at incentive ``i``. Accepts arrays."""
    return (1.0 + i) * q - swap_for(m, q)


def q_opt(m: SlippageModel, i: float) -> float:
    """Profit-maximizing repay amount under the linear slippage model.

    Returns 0 when (1+i)(1-gamma) <= 1 (no size is profitable). For
    sigma = 0 with a profitable incentive the optimum is unbounded and
    ``math.inf`` is returned; callers cap it with the other repay
    constraints.
    """
    if i < 0:
        raise ValueError(f"incentive must be >= 0, got {i}")
    edge = ((1.0 + i) * (1.0 - m.gamma)) ** 2
    if edge <= 1.0:
        return 0.0
    if m.sigma == 0.0:
        return math.inf
    return m.liquidity * (edge - 1.0) / (4.0 * m.sigma * (1.0 + i) ** 2)


def repay_amount(m: SlippageModel, i: float, c: float, p: Portfolio) -> float:
    """Executable repay size: min of the optimum, the closing-factor cap
    c*B, and collateral exhaustion C/(1+i); floored at zero."""
    return max(0.0, min(q_opt(m, i), c * p.total_debt, p.total_collateral / (1.0 + i)))


def apply_amounts(p: Portfolio, repaid: float, seized: float) -> Portfolio:
    """Apply one repay/seize pair, drawing proportionally across assets."""
    if repaid < 0 or seized < 0:
        raise ValueError("repaid and seized must be >= 0")
    b, c = p.total_debt, p.total_collateral
    if repaid > b * (1.0 + 1e-12):
        raise ValueError(f"repaid {repaid} exceeds outstanding debt {b}")
    if seized > c * (1.0 + 1e-12):
        raise ValueError(f"seized {seized} exceeds collateral {c}")
    debt_factor = max(0.0, 1.0 - repaid / b) if b > 0 else 1.0
    coll_factor = max(0.0, 1.0 - seized / c) if c > 0 else 1.0
    return scaled(p, coll_factor, debt_factor)


def apply_liquidation(p: Portfolio, repaid: float, incentive: float) -> Portfolio:
    """Apply one liquidation at incentive ``incentive``: seize (1+i) x repaid."""
    return apply_amounts(p, repaid, (1.0 + incentive) * repaid)


def cascade_totals(
    b: float,
    c: float,
    threshold: float,
    cfg: PolicyConfig,
    m: SlippageModel,
    dust: float = DUST_USD,
    events: list[LiquidationEvent] | None = None,
) -> tuple[float, float]:
    """Run the within-step liquidation loop on aggregate totals (B, C).

    Repeats while the policy allows liquidation at the current LTV, the
    executable size exceeds ``dust``, and the liquidator's profit is
    strictly positive; incentive and closing factor are re-resolved from
    the post-event LTV each iteration. Exact for portfolios because
    events repay and seize proportionally across assets, which leaves the
    weighted liquidation threshold unchanged.
    """
    while c > 0.0 and b > 0.0:
        cur = b / c
        allow, i, close = step_parameters(cfg, cur, ltv_liq=threshold)
        if not allow:
            break
        q = min(q_opt(m, i), close * b, c / (1.0 + i))
        if q <= dust:
            break
        x = swap_for(m, q)
        pi = (1.0 + i) * q - x
        if pi <= 0.0:
            break
        seized = (1.0 + i) * q
        b = max(0.0, b - q)
        c = max(0.0, c - seized)
        if b < VALUE_EPSILON:
            b = 0.0
        if c < VALUE_EPSILON:
            c = 0.0
        if events is not None:
            after = math.inf if c == 0.0 else b / c
            events.append(LiquidationEvent(q, seized, i, close, x, pi, cur, after))
    return b, c


def liquidate_step(
    p: Portfolio, cfg: PolicyConfig, m: SlippageModel, dust: float = DUST_USD
) -> tuple[Portfolio, list[LiquidationEvent]]:
    """Run one time step's liquidation cascade against ``p``.

    Returns the post-cascade portfolio and the ordered events executed;
    a portfolio that is not liquidatable (or already fully repossessed)
    comes back unchanged with no events.
    """
    c0 = p.total_collateral
    b0 = p.total_debt
    if c0 <= 0.0 or b0 <= 0.0:
        return p, []
    threshold = liq_threshold(p)
    events: list[LiquidationEvent] = []
    b1, c1 = cascade_totals(b0, c0, threshold, cfg, m, dust, events)
    if not events:
        return p, []
    return scaled(p, c1 / c0, b1 / b0), events

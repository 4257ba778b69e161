"""liqsim: liquidation-spiral simulator and bad-debt analysis toolkit for
overcollateralized lending markets."""

from .engine import (
    LiquidationEvent,
    SlippageModel,
    SwapInfeasibleError,
    apply_liquidation,
    liquidate_step,
    profit,
    q_opt,
    repay_amount,
    slippage,
    swap_for,
)
from .montecarlo import (
    BadDebtReport,
    ScenarioConfig,
    TrajectorySource,
    run_experiment,
    simulate_trajectory,
    write_report,
)
from .policy import (
    PolicyConfig,
    PolicyKind,
    dynamic_closing,
    dynamic_incentive,
    is_toxic,
    step_parameters,
    uc_frontier,
)
from .portfolio import (
    FullyRepossessedError,
    Portfolio,
    PriceState,
    apply_prices,
    liq_threshold,
    ltv,
    shortfall,
)
from .prices import (
    PriceSeries,
    Trajectory,
    load_price_csv,
    log_returns,
    sample_trajectories,
    synthetic_gbm,
)
from .replay import (
    LiquidationRecord,
    dltv_distribution,
    fit_sigma,
    reconstruct_ltv,
    sigma_summary,
)

__version__ = "0.1.0"

__all__ = [
    "BadDebtReport",
    "FullyRepossessedError",
    "LiquidationEvent",
    "LiquidationRecord",
    "PolicyConfig",
    "PolicyKind",
    "Portfolio",
    "PriceSeries",
    "PriceState",
    "ScenarioConfig",
    "SlippageModel",
    "SwapInfeasibleError",
    "Trajectory",
    "TrajectorySource",
    "apply_liquidation",
    "apply_prices",
    "dltv_distribution",
    "dynamic_closing",
    "dynamic_incentive",
    "fit_sigma",
    "is_toxic",
    "liq_threshold",
    "liquidate_step",
    "load_price_csv",
    "log_returns",
    "ltv",
    "profit",
    "q_opt",
    "reconstruct_ltv",
    "repay_amount",
    "run_experiment",
    "sample_trajectories",
    "shortfall",
    "sigma_summary",
    "simulate_trajectory",
    "slippage",
    "step_parameters",
    "swap_for",
    "synthetic_gbm",
    "uc_frontier",
    "write_report",
]

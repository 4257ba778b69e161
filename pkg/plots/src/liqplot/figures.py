"""The four figure kinds rendered from simulator outputs.

Each builder returns a matplotlib Figure; the CLI owns file writing. Axis
conventions follow the analysis figures they mirror: LTV traces carry
threshold/frontier/parity reference lines, bad-debt histograms use a broken
x-axis with a dedicated zero panel, and sigma histograms draw per-population
medians as vertical lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from matplotlib.figure import Figure

POLICY_COLORS = {
    "toxic_baseline": "tab:green",
    "halt_above_uc": "tab:blue",
    "dynamic_incentive": "tab:orange",
    "dynamic_incentive_closing": "gold",
}
FALLBACK_COLORS = ["tab:purple", "tab:red", "tab:brown", "tab:pink", "tab:gray"]


@dataclass
class FigureSpec:
    """One figure request: kind, inputs, output path, axis options."""

    kind: str  # ltv_trace | baddebt_series | baddebt_hist | sigma_hist
    inputs: list[str]
    output: str
    prices: str | None = None
    threshold: float = 0.89
    frontier: float = 1.0 / 1.045
    bins: int = 50
    cutoff: float = 600.0
    title: str = ""
    options: dict = field(default_factory=dict)


def _color(label: str, index: int) -> str:
    return POLICY_COLORS.get(label, FALLBACK_COLORS[index % len(FALLBACK_COLORS)])


def ltv_trace_figure(
    trace: pd.DataFrame,
    threshold: float,
    frontier: float,
    prices: pd.DataFrame | None = None,
    title: str = "",
) -> Figure:
    """LTV history with the three reference lines; optional price overlay."""
    fig = Figure(figsize=(10, 5))
    ax = fig.add_subplot(111)
    t0 = float(trace["timestamp"].iloc[0])
    minutes = (trace["timestamp"] - t0) / 60.0
    ax.plot(minutes, trace["ltv"], color="goldenrod", lw=1.5, label="LTV")

    ax.axhline(threshold, color="black", lw=0.8,
               label=f"liquidation threshold {threshold:g}")
    ax.axhline(frontier, color="red", lw=1.0,
               label=f"UC frontier {frontier:.4f}")
    ax.axhline(1.0, color="black", lw=0.8, ls="--", label="LTV = 1")

    if prices is not None:
        ax2 = ax.twinx()
        pm = (prices["timestamp"] - t0) / 60.0
        ax2.plot(pm, prices["close"], color="tab:green", lw=1.0, alpha=0.7)
        ax2.set_ylabel("price (USD)", color="tab:green")
        ax2.tick_params(axis="y", colors="tab:green")

    ax.set_xlabel("minutes")
    ax.set_ylabel("loan-to-value")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(title or "Borrower LTV")
    fig.tight_layout()
    return fig


def baddebt_series_figure(
    series: list[tuple[str, pd.DataFrame]], title: str = ""
) -> Figure:
    """Mean bad-debt time series per policy with shaded 95% bands."""
    fig = Figure(figsize=(10, 5))
    ax = fig.add_subplot(111)
    for idx, (label, df) in enumerate(series):
        color = _color(label, idx)
        ax.plot(df["step"], df["mean"], color=color, lw=1.4, label=label)
        ax.fill_between(df["step"], df["lower"], df["upper"],
                        color=color, alpha=0.25, lw=0)
    ax.set_xlabel("minutes after start")
    ax.set_ylabel("bad debt (USD)")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(title or "Expected bad debt, 95% confidence bands")
    fig.tight_layout()
    return fig


def baddebt_hist_figure(
    samples: pd.DataFrame, bins: int = 50, title: str = ""
) -> Figure:
    """Broken-axis end-of-horizon histogram: zero mass left, tail right."""
    policies = [c for c in samples.columns if c != "trajectory_id"]
    fig = Figure(figsize=(10, 5))
    ax_zero, ax_tail = fig.subplots(
        1, 2, width_ratios=[1, 3], sharey=False)

    positives = {}
    width = 0.8 / max(len(policies), 1)
    for idx, name in enumerate(policies):
        values = samples[name].to_numpy(dtype=float)
        zero_mass = int((values == 0.0).sum())
        positives[name] = values[values > 0.0]
        ax_zero.bar(idx * width, zero_mass, width=width * 0.9,
                    color=_color(name, idx), label=name)
    ax_zero.set_xticks([])
    ax_zero.set_xlabel("no bad debt")
    ax_zero.set_ylabel("trajectories")

    tail_values = np.concatenate([v for v in positives.values()]) if positives else np.zeros(0)
    if tail_values.size:
        edges = np.linspace(0.0, float(tail_values.max()), bins + 1)
        for idx, name in enumerate(policies):
            if positives[name].size:
                ax_tail.hist(positives[name], bins=edges, histtype="step",
                             color=_color(name, idx), lw=1.4, label=name)
        ax_tail.legend(loc="best", fontsize=8)
    else:
        ax_tail.text(0.5, 0.5, "no nonzero bad debt", ha="center", va="center",
                     transform=ax_tail.transAxes)
    ax_tail.set_xlabel("bad debt (USD)")

    # Broken-axis markers between the two panels.
    ax_zero.spines["right"].set_visible(False)
    ax_tail.spines["left"].set_visible(False)
    ax_tail.tick_params(left=False, labelleft=False)
    for ax, x in ((ax_zero, 1.0), (ax_tail, 0.0)):
        ax.plot([x, x], [-0.02, 0.02], transform=ax.transAxes,
                color="k", clip_on=False, lw=1)

    fig.suptitle(title or "Bad debt at the end of the horizon")
    fig.tight_layout()
    return fig


def _median_lower(values: np.ndarray) -> float:
    if values.size == 0:
        return math.nan
    ordered = np.sort(values)
    return float(ordered[(ordered.size - 1) // 2])


def sigma_hist_figure(
    fit: pd.DataFrame, bins: int = 40, cutoff: float = 600.0, title: str = ""
) -> Figure:
    """Before/after-frontier slippage-factor histograms with median lines."""
    used = fit[fit["included"] == 1]
    sigmas = used["sigma"].to_numpy(dtype=float)
    above = used["above_frontier"].to_numpy(dtype=int) == 1
    below_vals = sigmas[~above]
    above_vals = sigmas[above]

    shown = sigmas[sigmas <= cutoff]
    truncated = int((sigmas > cutoff).sum())

    fig = Figure(figsize=(10, 5))
    ax = fig.add_subplot(111)
    if shown.size:
        edges = np.linspace(float(min(shown.min(), 0.0)), float(shown.max()), bins + 1)
        ax.hist(below_vals[below_vals <= cutoff], bins=edges, alpha=0.55,
                color="tab:blue", label="before crossing")
        ax.hist(above_vals[above_vals <= cutoff], bins=edges, alpha=0.55,
                color="tab:red", label="after crossing")
    for values, color, label in (
        (below_vals, "tab:blue", "median before"),
        (above_vals, "tab:red", "median after"),
        (sigmas, "black", "median all"),
    ):
        med = _median_lower(values)
        if not math.isnan(med) and med <= cutoff:
            ax.axvline(med, color=color, ls="--", lw=1.2, label=f"{label} = {med:.3g}")
    if truncated:
        ax.annotate(f"{truncated} values above {cutoff:g} not shown",
                    xy=(0.98, 0.95), xycoords="axes fraction",
                    ha="right", fontsize=8)
    ax.set_xlabel("slippage factor")
    ax.set_ylabel("events")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(title or "Empirical slippage factors")
    fig.tight_layout()
    return fig

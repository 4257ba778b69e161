"""Policy-comparison Monte Carlo: simulate bad debt per trajectory and
policy, then aggregate means, confidence bands, histograms, and tail stats.

Bad-debt accounting per step: while collateral remains, the metric is the
instantaneous shortfall max(0, B - C), which can recover as prices do; the
moment collateral is exhausted the leftover debt is frozen into a realized
total that never un-accrues.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import DUST_USD, SlippageModel, cascade_totals
from .policy import PolicyConfig
from .portfolio import Portfolio, liq_threshold
from .prices import PriceSeries, Trajectory, log_returns, sample_trajectories, synthetic_gbm

REPORT_VERSION = 1
Z_95 = 1.96


@dataclass(frozen=True)
class TrajectorySource:
    """Where the trajectory set comes from.

    ``historical`` bootstraps windows from a return series (``count`` draws,
    doubled by reversal); ``synthetic`` generates ``count`` seeded
    geometric-random-walk paths; ``explicit`` uses a pre-built list.
    """

    source: str = "synthetic"
    horizon: int = 1440
    count: int = 1000
    returns: np.ndarray | None = None
    mode: str = "window"
    mu: float = 0.0
    sigma_step: float = 0.0
    trajectories: tuple[Trajectory, ...] | None = None

    def __post_init__(self) -> None:
        if self.source not in ("historical", "synthetic", "explicit"):
            raise ValueError(f"unknown trajectory source {self.source!r}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.source != "explicit" and self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    @classmethod
    def historical(
        cls, series: PriceSeries, count: int, horizon: int = 1440, mode: str = "window"
    ) -> "TrajectorySource":
        return cls(source="historical", horizon=horizon, count=count,
                   returns=log_returns(series), mode=mode)

    @classmethod
    def explicit(cls, trajectories: list[Trajectory]) -> "TrajectorySource":
        if not trajectories:
            raise ValueError("explicit trajectory set must be non-empty")
        horizon = len(trajectories[0])
        return cls(source="explicit", horizon=horizon, trajectories=tuple(trajectories))


def build_trajectories(src: TrajectorySource, seed: int) -> list[Trajectory]:
    """Materialize the trajectory set for a source spec (seeded, reproducible)."""
    if src.source == "explicit":
        trajs = list(src.trajectories or ())
    elif src.source == "historical":
        if src.returns is None:
            raise ValueError("historical source needs a return series")
        trajs = sample_trajectories(src.returns, src.count, src.horizon, seed, src.mode)
    else:
        trajs = synthetic_gbm(src.mu, src.sigma_step, src.horizon, src.count, seed)
    ids = [t.id for t in trajs]
    if len(set(ids)) != len(ids):
        raise ValueError("trajectory ids must be unique")
    for t in trajs:
        if len(t) != src.horizon:
            raise ValueError(f"trajectory {t.id} has length {len(t)}, expected {src.horizon}")
    return trajs


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment: a portfolio stressed by trajectories under several policies."""

    portfolio: Portfolio
    policies: tuple[PolicyConfig, ...]
    slippage: SlippageModel
    trajectories: TrajectorySource
    seed: int = 0
    dust: float = DUST_USD
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.policies:
            raise ValueError("at least one policy is required")
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ValueError(f"policy names must be unique, got {names}")


def simulate_trajectory(
    p0: Portfolio,
    cfg: PolicyConfig,
    m: SlippageModel,
    t: Trajectory,
    dust: float = DUST_USD,
) -> np.ndarray:
    """Bad-debt series (USD, one value per step) for one policy on one path.

    Each step applies the price factor to the debt side, runs the
    liquidation cascade, and records realized-plus-instantaneous bad debt.
    Runs on aggregate (B, C) totals, which is exact because cascades repay
    and seize proportionally across assets and the trajectory moves all
    debt assets by the same factor. Shortfall gaps within the cascade's
    dust threshold are reported as zero: the engine cannot move amounts
    that small, so they are numerical residue, not bad debt.
    """
    b = p0.total_debt
    c = p0.total_collateral
    realized = 0.0
    if c <= 0.0:
        # Nothing left to repossess: whatever is owed is already bad debt.
        realized, b = b, 0.0
        threshold = 1.0
    else:
        threshold = liq_threshold(p0)
    out = np.empty(len(t), dtype=float)
    for k, f in enumerate(t.factors.tolist()):
        b *= f
        if b > 0.0 and c > 0.0 and b > threshold * c:
            b, c = cascade_totals(b, c, threshold, cfg, m, dust)
            if c == 0.0:
                realized += b
                b = 0.0
        gap = b - c
        out[k] = realized + gap if gap > dust else realized
    return out


@dataclass
class PolicyStats:
    """Aggregated bad-debt statistics for one policy."""

    name: str
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    final: np.ndarray
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    zero_count: int
    p_bad_debt: float
    tail_mean: float
    mean_final: float


@dataclass
class BadDebtReport:
    """Per-policy time series, bands, end-of-horizon histograms, tail stats."""

    policies: list[PolicyStats]
    n_trajectories: int
    horizon: int
    seed: int
    config_hash: str = ""
    trajectory_ids: list[int] = field(default_factory=list)

    def stats(self, name: str) -> PolicyStats:
        for p in self.policies:
            if p.name == name:
                return p
        raise KeyError(name)


def _simulate_chunk(args) -> list[tuple[int, np.ndarray]]:
    p0, cfg, m, chunk, dust = args
    return [(t.id, simulate_trajectory(p0, cfg, m, t, dust)) for t in chunk]


def _aggregate(name: str, matrix: np.ndarray) -> PolicyStats:
    n = matrix.shape[0]
    mean = matrix.mean(axis=0)
    if n >= 2:
        sem = matrix.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        sem = np.zeros_like(mean)
    final = matrix[:, -1].copy()
    positive = final[final > 0.0]
    zero_count = int(final.size - positive.size)
    if positive.size:
        edges = np.linspace(0.0, float(positive.max()), 51)
        counts, _ = np.histogram(positive, bins=edges)
    else:
        edges = np.zeros(0)
        counts = np.zeros(0, dtype=int)
    return PolicyStats(
        name=name,
        mean=mean,
        lower=mean - Z_95 * sem,
        upper=mean + Z_95 * sem,
        final=final,
        hist_edges=edges,
        hist_counts=counts,
        zero_count=zero_count,
        p_bad_debt=float(positive.size) / n,
        tail_mean=float(positive.mean()) if positive.size else 0.0,
        mean_final=float(final.mean()),
    )


def run_experiment(
    s: ScenarioConfig, trajectories: list[Trajectory] | None = None
) -> BadDebtReport:
    """Simulate every (trajectory, policy) pair and aggregate.

    Results are keyed by trajectory id and aggregated in id order, so the
    report is byte-identical for any worker count or completion order.
    """
    trajs = trajectories if trajectories is not None else build_trajectories(
        s.trajectories, s.seed)
    if not trajs:
        raise ValueError("empty trajectory set")
    horizon = len(trajs[0])
    order = {tid: row for row, tid in enumerate(sorted(t.id for t in trajs))}

    workers = s.workers if s.workers > 0 else (os.cpu_count() or 1)
    stats: list[PolicyStats] = []
    if workers > 1 and len(trajs) > 1:
        chunk_size = max(1, math.ceil(len(trajs) / (workers * 4)))
        chunks = [trajs[i : i + chunk_size] for i in range(0, len(trajs), chunk_size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cfg in s.policies:
                tasks = [(s.portfolio, cfg, s.slippage, ch, s.dust) for ch in chunks]
                matrix = np.empty((len(trajs), horizon), dtype=float)
                for part in pool.map(_simulate_chunk, tasks):
                    for tid, series in part:
                        matrix[order[tid]] = series
                stats.append(_aggregate(cfg.name, matrix))
    else:
        for cfg in s.policies:
            matrix = np.empty((len(trajs), horizon), dtype=float)
            for t in trajs:
                matrix[order[t.id]] = simulate_trajectory(
                    s.portfolio, cfg, s.slippage, t, s.dust)
            stats.append(_aggregate(cfg.name, matrix))

    return BadDebtReport(
        policies=stats,
        n_trajectories=len(trajs),
        horizon=horizon,
        seed=s.seed,
        trajectory_ids=sorted(t.id for t in trajs),
    )


def write_report(report: BadDebtReport, out_dir: str) -> dict[str, str]:
    """Write report.json plus per-policy series CSVs and the final-sample CSV.

    Returns a mapping of logical output name to file path. Files contain no
    wall-clock timestamps, so identical runs produce identical bytes.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths: dict[str, str] = {}

    for st in report.policies:
        path = os.path.join(out_dir, f"series_{st.name}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "mean", "lower", "upper"])
            for k in range(len(st.mean)):
                w.writerow([k + 1, repr(float(st.mean[k])),
                            repr(float(st.lower[k])), repr(float(st.upper[k]))])
        paths[f"series_{st.name}"] = path

    ids = report.trajectory_ids or list(range(report.n_trajectories))
    samples_path = os.path.join(out_dir, "final_samples.csv")
    with open(samples_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id"] + [st.name for st in report.policies])
        for row, tid in enumerate(ids):
            w.writerow([tid] + [repr(float(st.final[row])) for st in report.policies])
    paths["final_samples"] = samples_path

    doc = {
        "version": REPORT_VERSION,
        "seed": report.seed,
        "config_hash": report.config_hash,
        "horizon": report.horizon,
        "n_trajectories": report.n_trajectories,
        "policies": [
            {
                "name": st.name,
                "mean_final": st.mean_final,
                "p_bad_debt": st.p_bad_debt,
                "tail_mean": st.tail_mean,
                "zero_count": st.zero_count,
                "histogram": {
                    "edges": [float(e) for e in st.hist_edges],
                    "counts": [int(c) for c in st.hist_counts],
                },
                "series_csv": f"series_{st.name}.csv",
            }
            for st in report.policies
        ],
    }
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["report"] = report_path
    return paths

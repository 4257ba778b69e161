"""Monte Carlo runner: per-trajectory series, aggregation, determinism."""

import numpy as np
import pytest

from liqsim.engine import SlippageModel
from liqsim.montecarlo import (
    BadDebtReport,
    ScenarioConfig,
    TrajectorySource,
    build_trajectories,
    run_experiment,
    simulate_trajectory,
    write_report,
)
from liqsim.policy import PolicyConfig, PolicyKind, uc_frontier
from liqsim.portfolio import Portfolio
from liqsim.prices import Trajectory

ZERO_SLIP = SlippageModel(gamma=0.0, sigma=0.0, liquidity=190e6)
PAPER_MODEL = SlippageModel(gamma=0.003, sigma=1.0, liquidity=190e6)


def make(collateral_usd, debt_usd):
    return Portfolio({"USDC": collateral_usd}, {"CRV": debt_usd}, {"USDC": 0.89})


def flat(horizon, traj_id=0):
    return Trajectory(traj_id, np.ones(horizon))


ALL_POLICIES = tuple(PolicyConfig(kind=k) for k in PolicyKind)


class TestSimulateTrajectory:
    def test_flat_healthy_portfolio_stays_zero(self):
        p = make(100.0, 80.0)
        for cfg in ALL_POLICIES:
            out = simulate_trajectory(p, cfg, PAPER_MODEL, flat(32))
            assert out.shape == (32,)
            assert (out == 0.0).all()

    def test_static_price_exhaustion_oracle(self):
        # Toxic baseline above the frontier drains everything; leftover debt
        # equals B0 - C0/(1+i) by telescoping the seizure amounts.
        p = make(100.0, 97.0)
        cfg = PolicyConfig(kind=PolicyKind.TOXIC_BASELINE, i0=0.045)
        out = simulate_trajectory(p, cfg, ZERO_SLIP, flat(16))
        expected = 97.0 - 100.0 / 1.045
        assert out[-1] == pytest.approx(expected, rel=1e-6)
        assert out[0] == pytest.approx(expected, rel=1e-6)

    def test_halt_keeps_toxic_but_covered_portfolio_at_zero(self):
        p = make(100.0, 97.0)
        cfg = PolicyConfig(kind=PolicyKind.HALT_ABOVE_UC, i0=0.045)
        out = simulate_trajectory(p, cfg, ZERO_SLIP, flat(16))
        assert (out == 0.0).all()

    def test_shortfall_recovers_when_halted(self):
        # Price pushes LTV above 1 then recovers: the halted policy's
        # instantaneous shortfall dips back to zero.
        p = make(100.0, 97.0)
        cfg = PolicyConfig(kind=PolicyKind.HALT_ABOVE_UC, i0=0.045)
        factors = np.array([1.10, 1.0, 1.0 / 1.10, 1.0])
        out = simulate_trajectory(p, cfg, ZERO_SLIP, Trajectory(0, factors))
        assert out[0] == pytest.approx(97.0 * 1.10 - 100.0)
        assert out[2] == 0.0

    def test_realized_bad_debt_is_frozen(self):
        # Once collateral is gone the series never decreases, even if the
        # price collapses afterwards.
        p = make(100.0, 97.0)
        cfg = PolicyConfig(kind=PolicyKind.TOXIC_BASELINE, i0=0.045)
        factors = np.array([1.0, 0.5, 0.25, 0.1])
        out = simulate_trajectory(p, cfg, ZERO_SLIP, Trajectory(0, factors))
        assert (np.diff(out) >= 0.0).all()
        assert out[-1] == pytest.approx(97.0 - 100.0 / 1.045, rel=1e-6)

    def test_zero_debt_is_identically_zero(self):
        p = make(100.0, 0.0)
        rng = np.random.default_rng(5)
        t = Trajectory(0, np.exp(rng.normal(0, 0.05, 64)))
        for cfg in ALL_POLICIES:
            assert (simulate_trajectory(p, cfg, PAPER_MODEL, t) == 0.0).all()

    def test_matches_portfolio_engine_step_by_step(self):
        # The aggregate fast path must agree with the portfolio-level engine.
        from liqsim.engine import liquidate_step
        from liqsim.portfolio import apply_prices, deflate, PriceState, shortfall

        p0 = make(100.0, 88.0)
        rng = np.random.default_rng(11)
        factors = np.exp(rng.normal(0.002, 0.02, 96))
        for cfg in ALL_POLICIES:
            fast = simulate_trajectory(p0, cfg, PAPER_MODEL, Trajectory(0, factors))
            quantities = p0
            mult = 1.0
            realized = 0.0
            slow = []
            for f in factors:
                mult *= f
                valued = apply_prices(quantities, quantities, PriceState({"CRV": mult}))
                valued, _ = liquidate_step(valued, cfg, PAPER_MODEL)
                if valued.total_collateral == 0.0 and valued.total_debt > 0.0:
                    realized += valued.total_debt
                    valued = Portfolio({"USDC": 0.0}, {"CRV": 0.0}, {"USDC": 0.89})
                slow.append(realized + shortfall(valued))
                quantities = deflate(valued, PriceState({"CRV": mult}))
            np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-6)


class TestRunExperiment:
    def test_two_trajectory_hand_aggregation(self):
        # One flat path (no bad debt) and one pump path (full spiral).
        p = make(100.0, 88.0)
        cfg = PolicyConfig(kind=PolicyKind.TOXIC_BASELINE, i0=0.045)
        pump = np.ones(8)
        pump[3] = 1.25  # 0.88 -> 1.1: deep past the frontier
        trajs = [flat(8, 0), Trajectory(1, pump)]
        scenario = ScenarioConfig(
            portfolio=p, policies=(cfg,), slippage=ZERO_SLIP,
            trajectories=TrajectorySource.explicit(trajs), seed=1)
        report = run_experiment(scenario)
        st = report.policies[0]
        finals = sorted(st.final.tolist())
        assert finals[0] == 0.0
        assert finals[1] > 0.0
        assert st.mean_final == pytest.approx(sum(finals) / 2)
        assert st.p_bad_debt == pytest.approx(0.5)
        assert st.tail_mean == pytest.approx(finals[1])
        assert st.zero_count == 1

    def test_all_zero_report(self):
        p = make(100.0, 50.0)
        scenario = ScenarioConfig(
            portfolio=p, policies=(PolicyConfig(),), slippage=PAPER_MODEL,
            trajectories=TrajectorySource.explicit([flat(16, k) for k in range(4)]),
            seed=0)
        st = run_experiment(scenario).policies[0]
        assert (st.mean == 0.0).all()
        assert (st.lower == 0.0).all() and (st.upper == 0.0).all()
        assert st.p_bad_debt == 0.0
        assert st.tail_mean == 0.0
        assert st.hist_counts.size == 0

    def test_band_brackets_mean(self):
        p = make(100.0, 88.0)
        src = TrajectorySource(source="synthetic", horizon=64, count=12,
                               mu=0.004, sigma_step=0.02)
        scenario = ScenarioConfig(
            portfolio=p, policies=ALL_POLICIES, slippage=PAPER_MODEL,
            trajectories=src, seed=3)
        for st in run_experiment(scenario).policies:
            assert (st.lower <= st.mean + 1e-12).all()
            assert (st.mean <= st.upper + 1e-12).all()

    def test_order_independence(self):
        p = make(100.0, 88.0)
        trajs = build_trajectories(
            TrajectorySource(source="synthetic", horizon=32, count=8,
                             mu=0.003, sigma_step=0.03), seed=9)
        shuffled = list(reversed(trajs))
        base = ScenarioConfig(
            portfolio=p, policies=(PolicyConfig(),), slippage=PAPER_MODEL,
            trajectories=TrajectorySource.explicit(trajs), seed=0)
        perm = ScenarioConfig(
            portfolio=p, policies=(PolicyConfig(),), slippage=PAPER_MODEL,
            trajectories=TrajectorySource.explicit(shuffled), seed=0)
        a, b = run_experiment(base), run_experiment(perm)
        np.testing.assert_array_equal(a.policies[0].mean, b.policies[0].mean)
        np.testing.assert_array_equal(a.policies[0].final, b.policies[0].final)

    def test_policy_dominance_static_toxic(self):
        # Flat path above the frontier: halting is free, the baseline pays.
        p = make(100.0, 97.0)
        policies = (
            PolicyConfig(kind=PolicyKind.HALT_ABOVE_UC),
            PolicyConfig(kind=PolicyKind.DYNAMIC_INCENTIVE),
            PolicyConfig(kind=PolicyKind.TOXIC_BASELINE),
        )
        scenario = ScenarioConfig(
            portfolio=p, policies=policies, slippage=ZERO_SLIP,
            trajectories=TrajectorySource.explicit([flat(16)]), seed=0)
        report = run_experiment(scenario)
        halt = report.stats("halt_above_uc").mean_final
        dyn = report.stats("dynamic_incentive").mean_final
        toxic = report.stats("toxic_baseline").mean_final
        assert halt == 0.0
        assert halt <= dyn <= toxic
        assert toxic > 0.0

    def test_worker_count_does_not_change_results(self):
        p = make(100.0, 88.0)
        src = TrajectorySource(source="synthetic", horizon=48, count=10,
                               mu=0.004, sigma_step=0.03)
        results = []
        for workers in (1, 3):
            scenario = ScenarioConfig(
                portfolio=p, policies=ALL_POLICIES, slippage=PAPER_MODEL,
                trajectories=src, seed=17, workers=workers)
            results.append(run_experiment(scenario))
        for a, b in zip(results[0].policies, results[1].policies):
            np.testing.assert_array_equal(a.mean, b.mean)
            np.testing.assert_array_equal(a.final, b.final)

    def test_empty_trajectories_rejected(self):
        p = make(100.0, 88.0)
        scenario = ScenarioConfig(
            portfolio=p, policies=(PolicyConfig(),), slippage=PAPER_MODEL,
            trajectories=TrajectorySource(source="synthetic", horizon=8, count=1),
            seed=0)
        with pytest.raises(ValueError):
            run_experiment(scenario, trajectories=[])

    def test_duplicate_policy_names_rejected(self):
        with pytest.raises(ValueError):
            ScenarioConfig(
                portfolio=make(1.0, 0.5),
                policies=(PolicyConfig(), PolicyConfig()),
                slippage=PAPER_MODEL,
                trajectories=TrajectorySource(source="synthetic", horizon=8, count=1),
            )


class TestWriteReport:
    def test_files_written_and_stable(self, tmp_path):
        p = make(100.0, 88.0)
        src = TrajectorySource(source="synthetic", horizon=16, count=4,
                               mu=0.003, sigma_step=0.02)
        scenario = ScenarioConfig(
            portfolio=p, policies=ALL_POLICIES[:2], slippage=PAPER_MODEL,
            trajectories=src, seed=2)
        report = run_experiment(scenario)
        report.config_hash = "deadbeef"

        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        paths_a = write_report(report, str(dir_a))
        paths_b = write_report(report, str(dir_b))
        for key in paths_a:
            with open(paths_a[key], "rb") as fa, open(paths_b[key], "rb") as fb:
                assert fa.read() == fb.read()
        assert (dir_a / "report.json").exists()
        assert (dir_a / "final_samples.csv").exists()
        assert (dir_a / "series_toxic_baseline.csv").exists()

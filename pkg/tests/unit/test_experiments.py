"""
测试 Experiments 模块

小规模运行各子命令的实验；二叉律的位置是确定的，W_n(t) 恒为 1，
因此其结论不依赖蒙特卡罗噪声。
"""

import math
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd
import pytest

from core.experiments import (
    AnnealedLpExperiment,
    BaseExperiment,
    ExperimentAborted,
    ExperimentError,
    ExperimentFactory,
    ExperimentReport,
    ExperimentStatus,
    MDPAnnealedExperiment,
    MDPPopulationExperiment,
    MDPQuenchedExperiment,
    SimulateExperiment,
    combine_status,
    mean_and_se,
    run_annealed_lp,
    run_lp_rate,
    run_martingale_test,
    run_mdp_annealed_means,
    run_mdp_population,
    run_mdp_quenched_means,
    run_mdp_report,
    run_rates,
    run_simulate,
    run_spine_check,
    run_u_recursion_check,
    run_uniform_convergence,
)
from core.analytics import critical_interval
from core.experiments.annealed_lp import third_ratio
from core.experiments.lp_rate import classify_ratio, fit_window
from core.experiments.martingale import cell_passes
from core.experiments.mdp_population import population_target, trending, within_band
from core.experiments.recursion import factor_a, recursion_sides
from core.experiments.uniform import non_increasing, refined_grid, window
from core.settings import EXPERIMENT_IDS, RunConfig, config_from_dict
from tests.fixtures.models import (
    binary_state,
    iid_model,
    markov_model,
    poisson_state,
    single_state_model,
)

SEED = 20240501


def _config(model: dict, **sections: Any) -> RunConfig:
    data: Dict[str, Any] = {"seed": SEED, "model": model}
    data.update(sections)
    return config_from_dict(data)


def _binary(**sections: Any) -> RunConfig:
    sections.setdefault("simulation", {"n_max": 4, "replicates": 20, "t_grid": [0.0, 0.5]})
    return _config(single_state_model(binary_state()), **sections)


class _ConstantExperiment(BaseExperiment):
    experiment_id = "constant"

    def execute(self) -> Tuple[pd.DataFrame, Dict[str, Any], ExperimentStatus]:
        return pd.DataFrame({"n": [0, 1]}), {"note": "constant"}, ExperimentStatus.INCONCLUSIVE


class TestExperimentFactory:
    """测试实验工厂。"""

    def setup_method(self):
        """保存并清空注册表。"""
        self._saved = dict(ExperimentFactory._registry)
        ExperimentFactory.clear_registry()

    def teardown_method(self):
        """恢复注册表。"""
        ExperimentFactory.clear_registry()
        ExperimentFactory._registry.update(self._saved)

    @pytest.mark.unit
    def test_register_and_create(self):
        """注册后可按名称创建并运行。"""
        ExperimentFactory.register("constant", _ConstantExperiment)
        experiment = ExperimentFactory.create("constant", _binary(), threads=2)
        assert isinstance(experiment, _ConstantExperiment)
        assert experiment.threads == 2

        report = experiment.run()
        assert report.status is ExperimentStatus.INCONCLUSIVE
        assert report.exit_code == 3
        assert list(report.to_summary_dict()) == ["experiment", "config_hash", "seed", "status", "note"]

    @pytest.mark.unit
    def test_register_duplicate_raises_error(self):
        """重复注册抛出 ValueError。"""
        ExperimentFactory.register("constant", _ConstantExperiment)
        with pytest.raises(ValueError, match="already registered"):
            ExperimentFactory.register("constant", _ConstantExperiment)

    @pytest.mark.unit
    def test_register_requires_subclass(self):
        """非 BaseExperiment 子类被拒绝。"""
        with pytest.raises(TypeError, match="must inherit from BaseExperiment"):
            ExperimentFactory.register("bad", dict)

    @pytest.mark.unit
    def test_create_unknown(self):
        """未注册的实验抛出 ExperimentError。"""
        with pytest.raises(ExperimentError, match="Unknown experiment"):
            ExperimentFactory.create("nope", _binary())


class TestBuiltinRegistry:
    """测试内置实验的注册。"""

    @pytest.mark.unit
    def test_every_subcommand_is_registered(self):
        """每个子命令都有对应的实验类。"""
        assert ExperimentFactory.list_experiments() == sorted(EXPERIMENT_IDS)


class TestStatus:
    """测试结论与退出码。"""

    @pytest.mark.unit
    @pytest.mark.parametrize("status, code", [
        (ExperimentStatus.PASS, 0),
        (ExperimentStatus.FAIL, 2),
        (ExperimentStatus.INCONCLUSIVE, 3),
        (ExperimentStatus.ERROR, 4),
    ])
    def test_exit_codes(self, status, code):
        """结论到退出码的映射。"""
        assert status.exit_code == code

    @pytest.mark.unit
    def test_combine_status(self):
        """FAIL 优先于 INCONCLUSIVE，INCONCLUSIVE 优先于 PASS。"""
        s = ExperimentStatus
        assert combine_status([s.PASS, s.INCONCLUSIVE, s.FAIL]) is s.FAIL
        assert combine_status([s.PASS, s.INCONCLUSIVE]) is s.INCONCLUSIVE
        assert combine_status([s.PASS, s.PASS]) is s.PASS
        assert combine_status([]) is s.PASS

    @pytest.mark.unit
    def test_mean_and_se(self):
        """SE 使用 ddof=1；单样本 SE 为 0。"""
        mean, se = mean_and_se([1.0, 3.0])
        assert mean == 2.0
        assert se == pytest.approx(1.0)
        assert mean_and_se([5.0]) == (5.0, 0.0)


class TestBaseExperiment:
    """测试实验基类的前提检查。"""

    @pytest.mark.unit
    def test_seed_required(self):
        """没有主种子时拒绝运行。"""
        config = config_from_dict({"model": single_state_model(binary_state())})
        with pytest.raises(ExperimentError, match="master seed is required"):
            SimulateExperiment(config)

    @pytest.mark.unit
    def test_threads_must_be_positive(self):
        """threads < 1 被拒绝。"""
        with pytest.raises(ExperimentError, match="threads must be >= 1"):
            SimulateExperiment(_binary(), threads=0)

    @pytest.mark.unit
    def test_cap_abort_carries_partial_report(self):
        """超限时中止，部分报告只含全部重复都已到达的代。"""
        config = _binary(simulation={"n_max": 4, "replicates": 20, "t_grid": [0.0, 0.5], "cap": 3})
        with pytest.raises(ExperimentAborted, match="Population cap exceeded at generation 3") as info:
            run_simulate(config)
        report = info.value.report
        assert report.status is ExperimentStatus.ERROR
        assert report.summary["failed_generation"] == 3
        assert report.summary["failed_size"] == 4
        assert report.table["n"].max() == 2
        assert len(report.table) == 20 * 3 * 2


class TestSimulate:
    """测试 simulate 实验。"""

    @pytest.mark.unit
    def test_table_shape_and_values(self):
        """每个 (replicate, n, t) 一行；二叉律 W_n(t) = 1，种群 2^n。"""
        report = run_simulate(_binary())
        table = report.table
        assert list(table.columns) == ["replicate", "n", "t", "population", "log_Ztilde", "log_P", "W"]
        assert len(table) == 20 * 5 * 2
        np.testing.assert_allclose(table["W"], 1.0, atol=1e-12)
        final = table[table["n"] == 4]
        assert set(final["population"]) == {16}
        assert report.summary["extinct_fraction"] == 0.0
        assert report.status is ExperimentStatus.PASS

    @pytest.mark.unit
    def test_threads_do_not_change_results(self, two_state_poisson_dict: dict):
        """同一种子下结果与进程数无关。"""
        config = _config(
            two_state_poisson_dict,
            simulation={"n_max": 3, "replicates": 6, "t_grid": [0.0, 0.3]},
        )
        sequential = run_simulate(config, threads=1).table
        parallel = run_simulate(config, threads=3).table
        pd.testing.assert_frame_equal(sequential, parallel)


class TestMartingale:
    """测试鞅性检验。"""

    @pytest.mark.unit
    def test_cell_rule(self):
        """|mean − 1| < 4·SE 或 ≤ 1e-9 时通过。"""
        assert cell_passes(1.05, 0.02)
        assert not cell_passes(1.1, 0.02)
        assert cell_passes(1.0 + 1e-12, 0.0)
        assert not cell_passes(1.01, 0.0)

    @pytest.mark.unit
    def test_binary_law_passes(self):
        """二叉律每个单元都通过。"""
        report = run_martingale_test(_binary())
        assert report.status is ExperimentStatus.PASS
        assert report.summary["failed_cells"] == 0
        assert report.summary["first_failing_n"] is None

    @pytest.mark.unit
    def test_biased_mean_fails(self):
        """P_n 乘以 (1.01)^n 后从 n = 1 起失败。"""
        config = _binary(
            simulation={"n_max": 4, "replicates": 20, "t_grid": [0.0, 0.5], "quenched_mean_bias": 0.01}
        )
        report = run_martingale_test(config)
        assert report.status is ExperimentStatus.FAIL
        assert report.summary["first_failing_n"] == 1
        assert report.summary["failed_cells"] == 8

    @pytest.mark.unit
    def test_branching_consistency(self):
        """二叉律 Z_{n+1}/Z_n 恒为 π = 2。"""
        report = run_martingale_test(_binary())
        for row in report.summary["branching_consistency"]:
            assert row["mean_ratio"] == pytest.approx(2.0)
            assert row["pi"] == pytest.approx(2.0)


class TestRates:
    """测试 rates 实验。"""

    @pytest.mark.unit
    def test_two_state_model_passes(self, two_state_poisson_dict: dict):
        """两状态 PoissonGaussian：0 ∈ I，ρ_0 ≤ ρ_c，对数凸。"""
        report = run_rates(_config(two_state_poisson_dict))
        assert report.status is ExperimentStatus.PASS
        assert report.summary["violations"] == []
        assert report.summary["log_rho_c"] == pytest.approx(math.log(report.summary["rho_c"]))
        assert list(report.table["t"]) == [-1.0, -0.5, 0.0, 0.5, 1.0]


class TestLpRate:
    """测试淬火 Lᵖ 速率实验。"""

    @pytest.mark.unit
    def test_fit_window(self):
        """窗口为 [N//3, 2N//3]。"""
        assert fit_window(9) == [3, 4, 5, 6]

    @pytest.mark.unit
    def test_classify_ratio(self):
        """Â 比值分类。"""
        assert classify_ratio(None) == "undetermined"
        assert classify_ratio(1.2) == "stable"
        assert classify_ratio(50.0) == "divergent"
        assert classify_ratio(5.0) == "undetermined"

    @pytest.mark.unit
    def test_vanishing_errors_pass(self):
        """二叉律 W_n ≡ 1，误差只剩舍入噪声。"""
        report = run_lp_rate(_binary(simulation={"n_max": 6, "replicates": 5}))
        assert report.status is ExperimentStatus.PASS
        assert report.summary["note"] == "errors vanish up to rounding"
        assert report.summary["rho_c"] == pytest.approx(1.12508, abs=1e-5)
        assert len(report.table) == 6

    @pytest.mark.unit
    def test_rho_c_below_one_still_judged(self):
        """ρ_c = √(2/e) < 1：不预测指数速率，但仍按斜率上界给出 PASS/FAIL。"""
        config = _config(
            single_state_model(poisson_state(2.0)),
            simulation={"n_max": 9, "replicates": 100, "t_grid": [1.0]},
        )
        report = run_lp_rate(config)
        summary = report.summary
        assert summary["rho_c"] == pytest.approx(math.sqrt(2 / math.e), abs=1e-12)
        assert summary["note"] == "rho_c <= 1: no exponential rate predicted"
        assert report.status is not ExperimentStatus.INCONCLUSIVE
        bound = -math.log(summary["rho_c"]) + 3.0 * summary["slope_se"]
        expected = ExperimentStatus.PASS if summary["slope"] <= bound else ExperimentStatus.FAIL
        assert report.status is expected

    @pytest.mark.unit
    def test_p_above_t_plus_is_accepted(self):
        """归一化 PoissonGaussian(4,0,1)：t₊ = √(2 log 4) < p = 2，实验仍照常运行。"""
        config = _config(
            single_state_model(poisson_state(4.0)),
            simulation={"n_max": 6, "replicates": 10, "t_grid": [1.0]},
        )
        t_plus = critical_interval(config.environment_model().normalize_at(1.0)).t_plus
        assert t_plus == pytest.approx(math.sqrt(2 * math.log(4.0)), rel=1e-8)
        assert t_plus < config.lp.p
        report = run_lp_rate(config)
        assert report.status is not ExperimentStatus.ERROR
        assert report.summary["p"] == 2.0

    @pytest.mark.unit
    def test_p_below_two_rejected(self):
        """p < 2 被拒绝。"""
        with pytest.raises(ExperimentError, match="needs p >= 2"):
            run_lp_rate(_binary(), p=1.5)

    @pytest.mark.unit
    def test_short_horizon_rejected(self):
        """拟合窗口不足 3 点时拒绝。"""
        with pytest.raises(ExperimentError, match="fewer than 3 points"):
            run_lp_rate(_binary(simulation={"n_max": 3, "replicates": 5}))


class TestAnnealedLp:
    """测试退火 Lᵖ 二分实验。"""

    @pytest.mark.unit
    def test_third_ratio(self):
        """后三分之一均值与前三分之一均值之比。"""
        assert third_ratio(np.array([1.0, 1.0, 2.0, 2.0, 4.0, 4.0])) == pytest.approx(4.0)
        assert third_ratio(np.array([0.0, 1.0, 1.0])) == math.inf
        assert third_ratio(np.array([0.0, 0.0, 0.0])) == 1.0

    @pytest.mark.unit
    def test_binary_law_is_bounded(self):
        """归一化二叉律：E m̄(2) = 2cosh 2/(2cosh 1)² < 1，预测与观测都为有界。"""
        report = run_annealed_lp(_binary(simulation={"n_max": 6, "replicates": 10}))
        expected = 2 * math.cosh(2.0) / (2 * math.cosh(1.0)) ** 2
        assert report.summary["mean_m_bar_p"] == pytest.approx(expected, rel=1e-12)
        assert report.summary["predicted"] == "bounded"
        assert report.summary["observed"] == "bounded"
        assert report.status is ExperimentStatus.PASS

    @pytest.mark.unit
    def test_p_must_exceed_one(self):
        """p ≤ 1 被拒绝。"""
        with pytest.raises(ExperimentError, match="needs p > 1"):
            run_annealed_lp(_binary(), p=1.0)

    @pytest.mark.unit
    def test_markov_environment_rejected(self):
        """只接受 i.i.d. 环境。"""
        config = _config(markov_model([binary_state("a"), binary_state("c")]))
        with pytest.raises(ExperimentError, match="iid environment"):
            AnnealedLpExperiment(config).run()


class TestUniform:
    """测试一致收敛实验。"""

    @pytest.mark.unit
    def test_helpers(self):
        """细网格的偶数位置构成粗网格；窗口为 [N//3, 3N//4]。"""
        grid = refined_grid(-0.3, 0.3, 0.1)
        assert len(grid) == 13
        np.testing.assert_allclose(grid[::2], np.linspace(-0.3, 0.3, 7))
        assert window(8) == [2, 3, 4, 5, 6]
        assert non_increasing([3.0, 2.0, 2.0, 1.0])
        assert not non_increasing([1.0, 2.0])

    @pytest.mark.unit
    def test_binary_law_converges(self):
        """二叉律 D_n 恒为 0（舍入内）。"""
        report = run_uniform_convergence(_binary(simulation={"n_max": 8, "replicates": 5}))
        assert report.status is ExperimentStatus.PASS
        assert report.summary["final_median"] < 1e-12
        assert report.summary["window"] == [2, 6]

    @pytest.mark.unit
    def test_n_max_too_small(self):
        """n_max < 4 被拒绝。"""
        with pytest.raises(ExperimentError, match="n_max >= 4"):
            run_uniform_convergence(_binary(simulation={"n_max": 3, "replicates": 5}))

    @pytest.mark.unit
    def test_outside_critical_interval_rejected(self):
        """K 超出临界区间时拒绝。"""
        config = _config(
            iid_model([poisson_state(3.0, state_id="a"), poisson_state(5.0, state_id="b")]),
            simulation={"n_max": 6, "replicates": 5},
        )
        with pytest.raises(ExperimentError, match="in_I=False"):
            run_uniform_convergence(config, K=(1.0, 2.0))


class TestMDPMeans:
    """测试缩放累积量实验。"""

    @pytest.mark.unit
    def test_quenched_binary(self):
        """二叉律：n log cosh(a_n t/n)·n/a_n² → t²/2，偏差随 n 减小。"""
        config = _binary(mdp={"n_list": [100, 1000, 10000]})
        estimate = run_mdp_quenched_means(config)
        assert estimate.sigma2 == pytest.approx(1.0)
        assert estimate.deviation[0] > estimate.deviation[1] > estimate.deviation[2]

        n, t = 10000, 1.0
        a_n = n**0.6
        expected = n * n / (a_n * a_n) * math.log(math.cosh(a_n * t / n))
        j = estimate.t_grid.index(t)
        assert estimate.scaled[2, j] == pytest.approx(expected, rel=1e-9)

    @pytest.mark.unit
    @pytest.mark.parametrize("form", ["weighted", "plain"])
    def test_annealed_binary(self, form):
        """单状态模型的两种退火形式都收敛到 t²/2。"""
        estimate = run_mdp_annealed_means(_binary(), n_list=[100, 10000], form=form)
        assert estimate.variant == form
        assert estimate.deviation[-1] < 1e-3

    @pytest.mark.unit
    def test_report_passes_and_reports_legendre(self):
        """最大 n 处偏差在容差内；Legendre 对照只报告。"""
        report = run_mdp_report(_binary(mdp={"n_list": [100, 1000, 10000]}))
        assert report.status is ExperimentStatus.PASS
        assert [row["x"] for row in report.summary["legendre"]] == [0.5, 1.0]
        assert list(report.table.columns) == ["n", "a_n", "t", "scaled_cumulant", "target", "deviation"]

    @pytest.mark.unit
    def test_tight_tolerance_fails(self):
        """容差小于离散偏差时失败。"""
        config = _binary(mdp={"n_list": [100], "tolerance": 1e-9})
        assert MDPAnnealedExperiment(config).run().status is ExperimentStatus.FAIL

    @pytest.mark.unit
    def test_uncentered_model_rejected(self):
        """未中心化的状态被拒绝。"""
        config = _config(single_state_model(poisson_state(2.0, mu=0.5)))
        with pytest.raises(ExperimentError, match="mdp-quenched refused"):
            MDPQuenchedExperiment(config).run()

    @pytest.mark.unit
    def test_annealed_needs_iid(self):
        """退火变体只接受 i.i.d. 环境。"""
        config = _config(markov_model([binary_state("a"), binary_state("c")]))
        with pytest.raises(ExperimentError, match="iid environment"):
            run_mdp_report(config, annealed=True)


def _binomial_log_fraction(n: int, lo: float, hi: float) -> float:
    """简单随机游走 S_n ∈ [lo, hi] 的对数概率。"""
    total = sum(math.comb(n, k) for k in range(n + 1) if lo <= 2 * k - n <= hi)
    return math.log(total) - n * math.log(2.0)


class TestMDPPopulation:
    """测试种群中偏差实验。"""

    @pytest.mark.unit
    def test_helpers(self):
        """目标、带宽与趋势判定。"""
        assert population_target([1.0, 2.0], 1.0) == pytest.approx(-0.5)
        assert population_target([-2.0, -0.5], 0.5) == pytest.approx(-0.25)
        assert population_target([-1.0, 1.0], 1.0) == 0.0
        assert within_band(-0.6, -0.5, 0.3)
        assert not within_band(-0.7, -0.5, 0.3)
        assert within_band(0.05, 0.0, 0.1)
        assert not within_band(-math.inf, -0.5, 0.3)
        assert trending([-1.5, -1.0, -0.8], -0.5)
        assert not trending([-1.5, -0.8, -1.0], -0.5)

    @pytest.mark.unit
    def test_binary_matches_binomial_oracle(self):
        """二叉律 Z_n(a_n A)/Z_n(ℝ) 等于简单随机游走的二项概率。"""
        n_list = [16, 25, 36]
        config = _binary(simulation={"n_max": 4, "replicates": 5}, mdp={"n_list": n_list})
        report = run_mdp_population(config)
        assert report.summary["target"] == pytest.approx(-0.5)
        for n, median in zip(report.table["n"], report.table["median_Y"]):
            a_n = n**0.6
            expected = n / (a_n * a_n) * _binomial_log_fraction(n, a_n * 1.0, a_n * 2.0)
            assert median == pytest.approx(expected, rel=1e-9)
        assert report.status in (ExperimentStatus.PASS, ExperimentStatus.FAIL)

    @pytest.mark.unit
    def test_extinction_rejected(self, poisson_model_dict: dict):
        """P(N=0) > 0 的律被拒绝。"""
        config = _config(poisson_model_dict, mdp={"n_list": [4, 9, 16]})
        with pytest.raises(ExperimentError, match="without extinction"):
            MDPPopulationExperiment(config).run()

    @pytest.mark.unit
    def test_needs_three_n_values(self):
        """n 列表至少 3 个不同值。"""
        with pytest.raises(ExperimentError, match="at least 3 distinct"):
            run_mdp_population(_binary(), n_list=[4, 4, 9])


class TestURecursion:
    """测试 U 递推不等式检查。"""

    @pytest.mark.unit
    def test_recursion_sides(self):
        """q = 1/(r−1)：左边 U_n^q，右边 A^q U_{n−1}^q + B^q U_{n−1}(r−1)^q。"""
        lhs, se_lhs, rhs, se_rhs = recursion_sides(
            1.0, (1.0, 0.0), (4.0, 0.0), (1.0, 0.0), (1.0, 0.0), 3.0
        )
        assert (lhs, rhs) == (pytest.approx(2.0), pytest.approx(2.0))
        assert se_lhs == 0.0 and se_rhs == 0.0

    @pytest.mark.unit
    def test_binary_law_passes(self):
        """二叉律 U_n ≡ 1，B = 1，A = m(3)/m(1)³。"""
        report = run_u_recursion_check(_binary())
        model = _binary().environment_model()
        expected_a = 2 * math.cosh(3.0) / (2 * math.cosh(1.0)) ** 3
        assert factor_a(model, 1.0, 0.0, 3.0) == pytest.approx(expected_a, rel=1e-12)
        assert report.summary["A"] == pytest.approx(expected_a, rel=1e-12)
        assert report.summary["B"] == pytest.approx(1.0, rel=1e-12)
        assert report.summary["B_exact"] is True
        assert report.summary["u1_minus_B"] < 1e-12
        assert report.status is ExperimentStatus.PASS
        assert set(report.table["status"]) == {"pass"}
        np.testing.assert_allclose(report.table["exact_U"].dropna(), 1.0, rtol=1e-12)

    @pytest.mark.unit
    def test_r_must_exceed_two(self):
        """r ≤ 2 被拒绝。"""
        with pytest.raises(ExperimentError, match="r > 2"):
            run_u_recursion_check(_binary(), r=2.0)


class TestSpineCheck:
    """测试 spine-check 实验中的确定性检查。"""

    @pytest.mark.unit
    def test_binary_exact_checks(self):
        """二叉律：W 恒等式与后代数边际精确成立。"""
        config = _binary(
            simulation={"n_max": 4, "replicates": 50},
            spine={"n": 3, "k": 1, "radon_nikodym_n": 2, "oracle_samples": 200},
        )
        report = run_spine_check(config)
        checks = list(report.table["check"])
        assert checks[:3] == ["w_identity", "independence", "radon_nikodym"]
        assert "count_marginal" in checks
        for failure in report.summary["failures"]:
            assert not failure.startswith(("w_identity", "count_marginal", "radon_nikodym"))
        assert isinstance(report, ExperimentReport)

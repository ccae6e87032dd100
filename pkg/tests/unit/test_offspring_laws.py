"""
测试 Offspring 繁殖律模块

测试 src/libs/offspring/ 的闭式泛函、整代采样、尺寸偏置采样与工厂
"""

import math

import numpy as np
import pytest
from scipy.stats import norm

from libs.offspring import (
    Atom,
    BaseOffspringLaw,
    ChildLimitExceeded,
    FiniteTableLaw,
    OffspringLawError,
    OffspringLawFactory,
    PoissonGaussianLaw,
    exp_abs_moment,
    laplace_m,
    log_laplace_m,
    m_log_derivative,
    quenched_w1_second_moment,
    sample_offspring,
    second_displacement_moment,
)


def _binary() -> FiniteTableLaw:
    return FiniteTableLaw(atoms=(Atom(1.0, 2, (-1.0, 1.0)),))


def _mixed() -> FiniteTableLaw:
    return FiniteTableLaw(atoms=(Atom(0.5, 2, (-1.0, 1.0)), Atom(0.5, 1, (0.0,))))


class TestFiniteTableFunctionals:
    """测试 FiniteTable 的精确泛函。"""

    @pytest.mark.unit
    def test_binary_laplace_is_two_cosh(self):
        """二叉 ±1 律：m(t) = 2 cosh t。"""
        law = _binary()
        for t in (-2.0, 0.0, 0.5, 3.0):
            assert laplace_m(law, t) == pytest.approx(2.0 * math.cosh(t), rel=1e-12)
            assert log_laplace_m(law, t) == pytest.approx(math.log(2.0 * math.cosh(t)), rel=1e-12)

    @pytest.mark.unit
    def test_binary_log_derivative_is_tanh(self):
        """m'(t)/m(t) = tanh t。"""
        law = _binary()
        for t in (-1.0, 0.0, 0.7):
            assert m_log_derivative(law, t) == pytest.approx(math.tanh(t), abs=1e-12)

    @pytest.mark.unit
    def test_log_laplace_does_not_overflow(self):
        """|t| 很大时对数域结果仍有限，laplace 溢出为 inf。"""
        law = _binary()
        assert log_laplace_m(law, 1000.0) == pytest.approx(1000.0, rel=1e-12)
        assert laplace_m(law, 1000.0) == math.inf

    @pytest.mark.unit
    def test_mixed_table_moments(self):
        """混合表：π = 1.5，二阶位移矩 = 2/3，中心化。"""
        law = _mixed()
        assert law.mean_count == pytest.approx(1.5)
        assert laplace_m(law, 0.3) == pytest.approx(math.cosh(0.3) + 0.5, rel=1e-12)
        assert second_displacement_moment(law) == pytest.approx(2.0 / 3.0, rel=1e-12)
        assert law.displacement_sum_mean() == 0.0
        assert law.extinction_probability == 0.0

    @pytest.mark.unit
    def test_exp_abs_moment(self):
        """二叉律：(1/π) E Σ e^{δ|L|} = e^δ；δ ≤ 0 被拒绝。"""
        law = _binary()
        assert exp_abs_moment(law, 0.5) == pytest.approx(math.exp(0.5), rel=1e-12)
        with pytest.raises(OffspringLawError, match="delta must be > 0"):
            exp_abs_moment(law, 0.0)

    @pytest.mark.unit
    def test_deterministic_law_has_unit_w1(self):
        """确定性律的 W_1(t) ≡ 1，因此 E W_1² = 1。"""
        law = _binary()
        assert quenched_w1_second_moment(law, 0.8) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.unit
    def test_w1_moment_of_mixed_table(self):
        """混合表在 t = 0：W_1 取 2/1.5 或 1/1.5，各概率 1/2。"""
        law = _mixed()
        expected = 0.5 * (2.0 / 1.5) ** 3 + 0.5 * (1.0 / 1.5) ** 3
        assert math.exp(law.log_w1_moment(0.0, 3.0)) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.unit
    def test_non_finite_argument_rejected(self):
        """非有限输入抛出 OffspringLawError。"""
        with pytest.raises(OffspringLawError, match="must be finite"):
            _binary().log_laplace(math.nan)

    @pytest.mark.unit
    def test_extinction_probability(self):
        """空原子贡献 P(N = 0)。"""
        law = FiniteTableLaw(atoms=(Atom(0.25, 0, ()), Atom(0.75, 2, (0.0, 1.0))))
        assert law.extinction_probability == pytest.approx(0.25)


_T_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)

_LAWS = [
    pytest.param(_binary(), id="binary"),
    pytest.param(_mixed(), id="mixed"),
    pytest.param(PoissonGaussianLaw(lam=2.0, mu=0.0, s=1.0), id="poisson-2"),
    pytest.param(PoissonGaussianLaw(lam=8.0, mu=-0.1, s=0.5), id="poisson-8"),
]


class TestFunctionalsAgainstNumerics:
    """闭式泛函与蒙特卡罗、有限差分的一致性。"""

    @pytest.mark.unit
    @pytest.mark.parametrize("law", _LAWS)
    def test_laplace_matches_monte_carlo(self, law: BaseOffspringLaw):
        """m(t) 与 20000 次独立采样的均值相差不超过 5 个标准误。"""
        rng = np.random.default_rng(20240501)
        draws = [law.sample_offspring(rng)[1] for _ in range(20_000)]
        for t in _T_GRID:
            sums = np.array([np.exp(t * d).sum() for d in draws])
            se = sums.std(ddof=1) / math.sqrt(sums.size)
            assert abs(sums.mean() - laplace_m(law, t)) <= 5.0 * se + 1e-12

    @pytest.mark.unit
    @pytest.mark.parametrize("law", _LAWS)
    def test_log_derivative_matches_central_difference(self, law: BaseOffspringLaw):
        """m'(t)/m(t) 与步长 1e-5 的中心差分相对误差 1e-6 以内。"""
        h = 1e-5
        for t in _T_GRID:
            difference = (log_laplace_m(law, t + h) - log_laplace_m(law, t - h)) / (2 * h)
            # 对称律在 t = 0 处导数为 0，相对误差无意义
            assert m_log_derivative(law, t) == pytest.approx(difference, rel=1e-6, abs=1e-9)


class TestFiniteTableValidation:
    """测试 FiniteTable 的构造校验。"""

    @pytest.mark.unit
    def test_probabilities_must_sum_to_one(self):
        """概率和偏离 1 超过 1e-12 被拒绝。"""
        with pytest.raises(OffspringLawError, match="sum to 1"):
            FiniteTableLaw(atoms=(Atom(0.5, 2, (-1.0, 1.0)), Atom(0.4, 1, (0.0,))))

    @pytest.mark.unit
    def test_displacement_length_must_match(self):
        """位移个数必须等于后代数。"""
        with pytest.raises(OffspringLawError, match="expected n_children=2"):
            FiniteTableLaw(atoms=(Atom(1.0, 2, (0.0,)),))

    @pytest.mark.unit
    def test_zero_mean_count_rejected(self):
        """π = 0 的律被拒绝。"""
        with pytest.raises(OffspringLawError, match="pi = 0"):
            FiniteTableLaw(atoms=(Atom(1.0, 0, ()),))

    @pytest.mark.unit
    def test_negative_probability_rejected(self):
        """负概率被拒绝。"""
        with pytest.raises(OffspringLawError, match="prob must be >= 0"):
            FiniteTableLaw(atoms=(Atom(-0.5, 1, (0.0,)), Atom(1.5, 1, (1.0,))))


class TestPoissonGaussianFunctionals:
    """测试 PoissonGaussian 的闭式泛函。"""

    @pytest.mark.unit
    def test_laplace_closed_form(self):
        """m(t) = λ exp(μt + s²t²/2)。"""
        law = PoissonGaussianLaw(lam=3.0, mu=0.2, s=1.5)
        t = 0.7
        expected = math.log(3.0) + 0.2 * t + 0.5 * 1.5**2 * t * t
        assert log_laplace_m(law, t) == pytest.approx(expected, rel=1e-12)
        assert m_log_derivative(law, t) == pytest.approx(0.2 + 1.5**2 * t, rel=1e-12)
        assert law.log_tilt_ratio(t) == pytest.approx(expected - math.log(3.0), rel=1e-12)

    @pytest.mark.unit
    def test_exp_abs_moment_folded_normal(self):
        """PG(2, 0, 1) 在 δ = 1：2 e^{1/2} Φ(1)。"""
        law = PoissonGaussianLaw(lam=2.0, mu=0.0, s=1.0)
        expected = 2.0 * math.exp(0.5) * norm.cdf(1.0)
        assert exp_abs_moment(law, 1.0) == pytest.approx(expected, rel=1e-12)
        assert exp_abs_moment(law, 1.0) == pytest.approx(2.77430, abs=1e-5)

    @pytest.mark.unit
    def test_exp_abs_moment_degenerate_spread(self):
        """s = 0 时位移恒为 μ。"""
        law = PoissonGaussianLaw(lam=2.0, mu=-0.5, s=0.0)
        assert exp_abs_moment(law, 2.0) == pytest.approx(math.e, rel=1e-12)

    @pytest.mark.unit
    def test_w1_second_moment(self):
        """E W_1(t)² = 1 + e^{t²s²}/λ。"""
        law = PoissonGaussianLaw(lam=2.0, mu=0.0, s=1.0)
        assert quenched_w1_second_moment(law, 0.0) == pytest.approx(1.5, rel=1e-12)
        assert quenched_w1_second_moment(law, 1.0) == pytest.approx(1.0 + math.e / 2.0, rel=1e-12)

    @pytest.mark.unit
    def test_w1_moment_only_at_gamma_two(self):
        """γ ≠ 2 没有闭式。"""
        with pytest.raises(OffspringLawError, match="only at gamma=2"):
            PoissonGaussianLaw(lam=2.0).log_w1_moment(0.5, 3.0)

    @pytest.mark.unit
    def test_moments_and_extinction(self):
        """二阶位移矩 μ² + s²，灭绝概率 e^{-λ}。"""
        law = PoissonGaussianLaw(lam=2.0, mu=0.5, s=2.0)
        assert second_displacement_moment(law) == pytest.approx(4.25)
        assert law.extinction_probability == pytest.approx(math.exp(-2.0))
        assert law.mean_count == 2.0

    @pytest.mark.unit
    @pytest.mark.parametrize("kwargs, message", [
        ({"lam": 0.0}, "lambda must be > 0"),
        ({"lam": 1.0, "s": -1.0}, "s must be >= 0"),
        ({"lam": 1.0, "mu": math.inf}, "mu must be finite"),
    ])
    def test_invalid_parameters(self, kwargs, message):
        """非法参数被拒绝。"""
        with pytest.raises(OffspringLawError, match=message):
            PoissonGaussianLaw(**kwargs)


class TestNormalization:
    """测试 t* 处的归一化。"""

    @pytest.mark.unit
    @pytest.mark.parametrize("law", [
        _binary(),
        _mixed(),
        PoissonGaussianLaw(lam=4.0, mu=0.3, s=1.2),
    ])
    def test_normalized_law_has_unit_laplace_at_one(self, law: BaseOffspringLaw):
        """归一化后 log m̄(1) = 0，且 m̄(t) = m(t·t*)/m(t*)^t。"""
        t_star = 0.8
        normalized = law.normalized(t_star)
        assert normalized.log_laplace(1.0) == pytest.approx(0.0, abs=1e-12)
        t = 1.7
        expected = law.log_laplace(t * t_star) - t * law.log_laplace(t_star)
        assert normalized.log_laplace(t) == pytest.approx(expected, abs=1e-10)

    @pytest.mark.unit
    def test_normalize_rejects_non_finite_t_star(self):
        """t* 非有限时抛出 OffspringLawError。"""
        with pytest.raises(OffspringLawError, match="t_star must be finite"):
            _binary().normalized(math.inf)


class TestSampling:
    """测试采样。"""

    @pytest.mark.unit
    def test_binary_generation_is_deterministic(self):
        """二叉律：站点 0 上 3 个粒子生成 {−1, +1} 各 3 个。"""
        rng = np.random.default_rng(1)
        sites, counts = _binary().sample_children(
            np.array([0.0]), np.array([3], dtype=np.int64), rng, limit=10
        )
        np.testing.assert_array_equal(sites, [-1.0, 1.0])
        np.testing.assert_array_equal(counts, [3, 3])
        assert counts.dtype == np.int64

    @pytest.mark.unit
    def test_coincident_children_are_merged(self):
        """相邻站点的子代落在同一位置时合并多重度。"""
        rng = np.random.default_rng(2)
        sites, counts = _binary().sample_children(
            np.array([-1.0, 1.0]), np.array([1, 2], dtype=np.int64), rng, limit=10
        )
        np.testing.assert_array_equal(sites, [-2.0, 0.0, 2.0])
        np.testing.assert_array_equal(counts, [1, 3, 2])

    @pytest.mark.unit
    def test_finite_table_conserves_particle_total(self):
        """混合表：每个粒子恰好选一个原子。"""
        rng = np.random.default_rng(3)
        mult = np.array([50, 70], dtype=np.int64)
        sites, counts = _mixed().sample_children(np.array([0.0, 5.0]), mult, rng, limit=100)
        ones = counts[np.isin(sites, [0.0, 5.0])].sum()
        twos = counts[~np.isin(sites, [0.0, 5.0])].sum()
        assert ones + twos // 2 == 120
        assert twos % 2 == 0

    @pytest.mark.unit
    def test_child_limit(self):
        """站点数超过上限时抛出 ChildLimitExceeded。"""
        rng = np.random.default_rng(4)
        with pytest.raises(ChildLimitExceeded, match="limit 1") as info:
            _binary().sample_children(np.array([0.0]), np.array([1], dtype=np.int64), rng, limit=1)
        assert info.value.size == 2
        assert info.value.limit == 1

    @pytest.mark.unit
    def test_poisson_generation_sizes(self):
        """PoissonGaussian：每个子代单独成站点，多重度为 1。"""
        rng = np.random.default_rng(5)
        sites, counts = PoissonGaussianLaw(lam=3.0).sample_children(
            np.zeros(4), np.ones(4, dtype=np.int64), rng, limit=1000
        )
        assert sites.size == counts.size
        assert np.all(counts == 1)

    @pytest.mark.unit
    def test_sampling_is_reproducible(self):
        """同一种子给出同一结果。"""
        law = PoissonGaussianLaw(lam=2.0, mu=0.1, s=0.5)
        first = sample_offspring(law, np.random.default_rng(7))
        second = sample_offspring(law, np.random.default_rng(7))
        assert first[0] == second[0]
        np.testing.assert_array_equal(first[1], second[1])

    @pytest.mark.unit
    def test_poisson_size_biased_adds_spine_child(self):
        """尺寸偏置 PoissonGaussian：额外点是最后一个子节点，即脊柱。"""
        rng = np.random.default_rng(8)
        count, displacements, spine = PoissonGaussianLaw(lam=2.0).size_biased_offspring(0.5, rng)
        assert count >= 1
        assert displacements.size == count
        assert spine == count - 1

    @pytest.mark.unit
    def test_size_biased_atom_probabilities(self):
        """混合表的尺寸偏置原子概率：p_a Σ e^{tL} / m(t)。"""
        t = 0.4
        probs = _mixed().size_biased_atom_probabilities(t)
        m = math.cosh(t) + 0.5
        np.testing.assert_allclose(probs, [math.cosh(t) / m, 0.5 / m], rtol=1e-12)

    @pytest.mark.unit
    def test_binary_spine_choice_is_tilted(self):
        """二叉律在 t 处选中 +1 子节点的频率约为 e^t / (2 cosh t)。"""
        t = 0.6
        rng = np.random.default_rng(9)
        picks = [_binary().size_biased_offspring(t, rng)[2] for _ in range(4000)]
        expected = math.exp(t) / (2.0 * math.cosh(t))
        assert np.mean(picks) == pytest.approx(expected, abs=0.03)


class TestOffspringLawFactory:
    """测试繁殖律工厂。"""

    def setup_method(self):
        """保存并清空注册表。"""
        self._saved = dict(OffspringLawFactory._registry)
        OffspringLawFactory.clear_registry()

    def teardown_method(self):
        """恢复注册表。"""
        OffspringLawFactory.clear_registry()
        OffspringLawFactory._registry.update(self._saved)

    @pytest.mark.unit
    def test_register_and_create(self):
        """注册后按 kind 创建。"""
        OffspringLawFactory.register("poisson_gaussian", PoissonGaussianLaw)
        law = OffspringLawFactory.create({"kind": "Poisson_Gaussian", "lambda": 2.0})
        assert isinstance(law, PoissonGaussianLaw)
        assert OffspringLawFactory.is_registered("poisson_gaussian")
        assert OffspringLawFactory.list_kinds() == ["poisson_gaussian"]

    @pytest.mark.unit
    def test_register_duplicate_raises_error(self):
        """重复注册抛出 ValueError。"""
        OffspringLawFactory.register("finite_table", FiniteTableLaw)
        with pytest.raises(ValueError, match="already registered"):
            OffspringLawFactory.register("finite_table", FiniteTableLaw)

    @pytest.mark.unit
    def test_register_non_law_raises_error(self):
        """注册非 BaseOffspringLaw 子类抛出 TypeError。"""
        class NotALaw:
            pass

        with pytest.raises(TypeError, match="must inherit from BaseOffspringLaw"):
            OffspringLawFactory.register("bogus", NotALaw)

    @pytest.mark.unit
    def test_unknown_kind(self):
        """未注册的 kind 给出可用列表。"""
        with pytest.raises(OffspringLawError, match="no kinds registered"):
            OffspringLawFactory.create({"kind": "geometric"})

    @pytest.mark.unit
    def test_missing_parameter_is_wrapped(self):
        """缺失参数包装为 OffspringLawError。"""
        OffspringLawFactory.register("poisson_gaussian", PoissonGaussianLaw)
        with pytest.raises(OffspringLawError, match="Failed to create"):
            OffspringLawFactory.create({"kind": "poisson_gaussian"})

    @pytest.mark.unit
    def test_to_dict_round_trip(self):
        """to_dict 的输出可重新创建同一律。"""
        OffspringLawFactory.register("finite_table", FiniteTableLaw)
        law = _mixed()
        assert OffspringLawFactory.create(law.to_dict()) == law

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pytest

from permtest.errors import InvalidParameter, TooManyClasses
from permtest.exact_test import (
    ClassRepresentatives,
    ThresholdSummary,
    balanced_classes,
    boundary_probability,
    class_representatives,
    full_group_pvalue,
    full_group_test,
    hoeffding_randomized_test,
    threshold_index,
    threshold_summary,
)
from permtest.groups import GroupSpec, balanced_permutations
from permtest.models import Decision
from permtest.statistics import DiffSumStatistic, MeanStatistic, Statistic, SumFirstStatistic, eval_statistic


def brute_force(x, stat, group, alpha):
    values = sorted(eval_statistic(stat, g.apply(x)) for g in group.enumerate())
    k = math.ceil((1 - alpha) * len(values) - 1e-9)
    observed = eval_statistic(stat, x)
    return observed > values[k - 1], sum(v >= observed for v in values)


def test_threshold_index_guards_rounding():
    assert threshold_index(1 / 3, 24) == 16
    assert threshold_index(0.05, 20) == 19
    assert threshold_index(0.0, 24) == 24
    assert threshold_index(0.999, 10) == 1


def test_worked_example_full_group(worked_x, diff2, s4):
    report = full_group_test(worked_x, s4, diff2, 1 / 3)
    assert report.counts.D == 8
    assert report.p_value == pytest.approx(1 / 3)
    assert report.threshold_index == 16
    assert report.threshold_value == pytest.approx(0.1)
    assert report.rejected
    assert report.decision == Decision.REJECT
    assert report.group_size == 24


def test_worked_example_with_class_representatives_matches(worked_x, diff2, s4):
    full = full_group_test(worked_x, s4, diff2, 1 / 3)
    compressed = full_group_test(worked_x, class_representatives(2), diff2, 1 / 3)
    assert compressed.model_dump(exclude={"method"}) == full.model_dump(exclude={"method"})


def test_alpha_zero_never_rejects(worked_x, diff2, s4):
    report = full_group_test(worked_x, s4, diff2, 0.0)
    assert report.threshold_index == 24
    assert not report.rejected


def test_constant_data_retains(diff2, s4):
    report = full_group_test(np.full(4, 1.5), s4, diff2, 0.5)
    assert report.counts.D == 24
    assert report.p_value == 1.0
    assert not report.rejected


def test_alpha_out_of_range(worked_x, diff2, s4):
    with pytest.raises(InvalidParameter):
        full_group_test(worked_x, s4, diff2, 1.0)


def test_continuous_p_values_are_multiples_of_class_size(rng, diff2, s4):
    for _ in range(20):
        x = rng.standard_normal(4)
        p = full_group_pvalue(x, s4, diff2)
        assert round(p * 6) == pytest.approx(p * 6)


@pytest.mark.parametrize("alpha", [0.05, 0.2, 1 / 3, 0.5])
def test_matches_brute_force_oracle(rng, alpha):
    stat = DiffSumStatistic(3)
    group = GroupSpec.parse("two-sample:3")
    reps = class_representatives(3)
    for _ in range(5):
        x = np.round(rng.standard_normal(6), 1)
        rejected, d = brute_force(x, stat, group, alpha)
        for source in (group, reps):
            report = full_group_test(x, source, stat, alpha)
            assert report.rejected == rejected
            assert report.counts.D == d


def test_sign_flip_mean_test(rng):
    x = np.array([1.2, 0.8, 2.5, 1.1, 0.4])
    report = full_group_test(x, GroupSpec.parse("sign-flip:5"), MeanStatistic(), 0.05)
    # 全正数据：只有恒等元取得最大均值
    assert report.counts.D == 1
    assert report.p_value == pytest.approx(1 / 32)
    assert report.rejected


def test_boundary_probability_examples():
    assert boundary_probability(5 / 24, 24, ThresholdSummary(k=20, value=0.0, greater=3, equal=4)) == pytest.approx(0.5)
    assert boundary_probability(0.05, 20, ThresholdSummary(k=19, value=0.0, greater=0, equal=2)) == pytest.approx(0.5)
    assert boundary_probability(0.05, 20, ThresholdSummary(k=19, value=0.0, greater=0, equal=0)) == 0.0


def test_threshold_summary_with_multiplicity_matches_expansion():
    values = np.array([3.0, 1.0, 2.0])
    expanded = np.repeat(values, 4)
    for alpha in (0.0, 0.1, 0.3, 0.5, 0.9):
        assert threshold_summary(values, alpha, multiplicity=4) == threshold_summary(expanded, alpha)


def test_hoeffding_on_constant_data(diff2, s4):
    x = np.zeros(4)
    rng = np.random.default_rng(0)
    low = hoeffding_randomized_test(x, s4, diff2, 0.05, rng, u=0.01)
    assert low.counts.M_plus == 0
    assert low.counts.M_zero == 24
    assert low.boundary_probability == pytest.approx(0.05)
    assert low.decision == Decision.REJECT_WITH_PROBABILITY
    assert low.rejected
    high = hoeffding_randomized_test(x, s4, diff2, 0.05, rng, u=0.5)
    assert not high.rejected


def test_hoeffding_rejection_rate_on_constant_data(diff2):
    reps = class_representatives(2)
    rng = np.random.default_rng(7)
    n = 20_000
    hits = sum(hoeffding_randomized_test(np.zeros(4), reps, diff2, 0.05, rng).rejected for _ in range(n))
    assert abs(hits / n - 0.05) <= 4 * math.sqrt(0.05 * 0.95 / n)


def test_hoeffding_agrees_with_basic_test_without_ties(rng):
    # 轨道无平局且 α·#G 为整数时边界上 a = 0，决策与基本检验一致
    group = GroupSpec.parse("sign-flip:4")
    for _ in range(30):
        x = rng.standard_normal(4)
        basic = full_group_test(x, group, MeanStatistic(), 0.25)
        randomized = hoeffding_randomized_test(x, group, MeanStatistic(), 0.25, rng)
        assert randomized.boundary_probability == 0.0
        assert basic.rejected == randomized.rejected


def test_hoeffding_randomized_p_value_consistent_with_decision(rng, diff2, s4):
    for _ in range(50):
        x = np.round(rng.standard_normal(4))
        report = hoeffding_randomized_test(x, s4, diff2, 0.25, rng)
        assert report.rejected == (report.randomized_p_value <= 0.25 + 1e-12)


def test_class_representatives_small_cases():
    one = class_representatives(1)
    assert one.m == 2
    assert one.reps.to_json() == [[0, 1], [1, 0]]
    two = class_representatives(2)
    assert two.m == 6
    assert two.class_size == 4
    assert two.group_size == 24
    assert two.reps.starts_with_identity()


def test_class_representatives_cap():
    with pytest.raises(TooManyClasses):
        class_representatives(12, max_classes=1000)


def test_threshold_summary_with_unequal_weights_matches_expansion():
    values = np.array([3.0, 1.0, 2.0, 2.0, 0.5])
    weights = np.array([1, 6, 2, 3, 4])
    expanded = np.repeat(values, weights)
    for alpha in (0.0, 0.05, 0.2, 0.4, 0.75, 0.95):
        assert threshold_summary(values, alpha, multiplicity=weights) == threshold_summary(expanded, alpha)


def test_weighted_classes_validate_sizes():
    reps = class_representatives(1).reps
    with pytest.raises(InvalidParameter):
        ClassRepresentatives(reps, (1, 2, 3))
    with pytest.raises(InvalidParameter):
        ClassRepresentatives(reps, (1, 0))
    assert ClassRepresentatives(reps, (1, 3)).group_size == 4


@pytest.mark.parametrize("n", [2, 4])
def test_balanced_classes_match_the_enumerated_balanced_set(n, rng):
    compressed = balanced_classes(n)
    explicit = GroupSpec.explicit(balanced_permutations(n).prepend_identity())
    assert compressed.group_size == len(explicit.enumerate())
    stat = DiffSumStatistic(n)
    for _ in range(15):
        x = np.round(rng.standard_normal(2 * n), 1)
        for alpha in (0.05, 0.2, 0.5):
            fast = full_group_test(x, compressed, stat, alpha)
            slow = full_group_test(x, explicit, stat, alpha)
            assert fast.rejected == slow.rejected
            assert fast.threshold_value == slow.threshold_value
            assert fast.counts == slow.counts


@dataclass(frozen=True)
class _StretchedDiffSum(Statistic):
    """差和 t 的 t³ + t，关于 t 严格递增。"""

    inner: DiffSumStatistic
    name = "stretched-diff-sum"

    def check_dimension(self, dimension: int) -> None:
        self.inner.check_dimension(dimension)

    def evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        t = self.inner.evaluate_rows(matrix)
        return t**3 + t


def test_counts_are_unchanged_by_a_strictly_increasing_transform(rng, diff2, s4):
    stretched = _StretchedDiffSum(diff2)
    for _ in range(40):
        x = np.round(rng.standard_normal(4), 1)
        assert full_group_pvalue(x, s4, stretched) == full_group_pvalue(x, s4, diff2)
        for alpha in (0.1, 1 / 3, 0.5):
            plain = full_group_test(x, s4, diff2, alpha)
            assert full_group_test(x, s4, stretched, alpha).rejected == plain.rejected


def test_p_value_moves_along_the_orbit_while_threshold_stays():
    # 同一轨道上 T^(k) 不变，但 T(gx) 随 g 改变，p 值随之改变
    group = GroupSpec.parse("full-symmetric:5")
    stat = SumFirstStatistic(2)
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    moved = group.enumerate()[-1].apply(x)
    assert full_group_test(x, group, stat, 0.1).threshold_value == full_group_test(moved, group, stat, 0.1).threshold_value
    assert full_group_pvalue(x, group, stat) != full_group_pvalue(moved, group, stat)

"""蒙特卡洛校准：估计第一类错误率、检验 p 值均匀性，并复现朴素 p 值、平衡置换与 Bonferroni 的反例。

第 i 次重复使用 ``default_rng([master_seed, 0, i])``，按下标归并结果，报告与并发度无关。
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pandas as pd
from loguru import logger
from scipy import stats as sps
from tqdm import tqdm

from .config import SimulationConfig
from .errors import ConfigError, RefusedNaivePlan, UnsupportedDesign
from .exact_test import (
    ClassRepresentatives,
    balanced_classes,
    class_representatives,
    full_group_test,
    hoeffding_randomized_test,
)
from .groups import FULL_SYMMETRIC, TWO_SAMPLE, GroupSpec, balanced_permutations, verify_group_axioms
from .models import ExceedanceRow, SimulationReport
from .null_models import build_null_sampler
from .random_test import (
    coset_scheme_test,
    estimate_pvalue,
    monte_carlo_test,
    random_test,
    randomized_exact_test,
)
from .sampling import CLASS_MODES, SamplingMode, SamplingPlan, draw_transforms
from .statistics import DiffSumStatistic, parse_statistic

TYPE1 = "type1"
UNIFORMITY = "uniformity"
BALANCED = "balanced"
BONFERRONI = "bonferroni"

DEFAULT_UNIFORMITY_CUTOFFS = [0.0, 0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0]
_SUBSET_STREAM = 1


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, 0, index])


@dataclass(frozen=True)
class Outcome:
    rejected: bool
    p_value: float
    control_rejected: bool = False


@dataclass(frozen=True, eq=False)
class ReplicationTrace:
    rejected: np.ndarray
    p_values: np.ndarray
    control_rejected: np.ndarray

    @property
    def replications(self) -> int:
        return int(self.rejected.shape[0])


class ProcedureRunner:
    """把配置里的检验描述编译成一次重复内可直接调用的对象。"""

    def __init__(self, config: SimulationConfig) -> None:
        self.config = config
        proc = config.test
        self.alpha = proc.alpha
        self.tolerance = proc.tie_tolerance
        self.stat = parse_statistic(proc.stat)
        self.group = GroupSpec.parse(proc.group)
        self.null_sampler = build_null_sampler(config.null_model)
        if self.group.dimension != config.null_model.size:
            raise ConfigError(
                f"群 {self.group} 作用于长度 {self.group.dimension} 的数据，零模型长度为 {config.null_model.size}"
            )
        self.stat.check_dimension(config.null_model.size)
        self.classes = self._classes()

        if proc.scheme in (SamplingMode.COSET.value, SamplingMode.EXPLICIT.value):
            raise ConfigError("coset/explicit 不是配置中的抽样方案，陪集检验请使用 method: coset")
        estimating = proc.method == "estimate"
        self.plan = SamplingPlan.from_scheme(proc.scheme, proc.w, include_identity=not estimating)
        if proc.method in ("random", "randomized") and not self.plan.include_identity and not proc.allow_naive:
            raise RefusedNaivePlan("naive 方案不含恒等元，需在配置中设置 allow_naive: true")
        if self.plan.mode in CLASS_MODES and self.classes is None:
            raise ConfigError("按类抽样需要两样本 diff-sum 设计")

        self.subset = None
        if proc.method == "coset":
            subset_rng = np.random.default_rng([config.master_seed, _SUBSET_STREAM])
            subset_plan = SamplingPlan(SamplingMode.WITHOUT_REPLACEMENT, proc.coset_size, include_identity=False)
            self.subset = draw_transforms(subset_plan, self.group, subset_rng).elements

    def _classes(self) -> Optional[ClassRepresentatives]:
        stat = self.stat
        if (
            isinstance(stat, DiffSumStatistic)
            and self.group.family in (TWO_SAMPLE, FULL_SYMMETRIC)
            and self.group.dimension == 2 * stat.n
        ):
            return class_representatives(stat.n)
        return None

    @property
    def full_source(self) -> GroupSpec | ClassRepresentatives:
        # 两样本 diff-sum 的每个等价类取值相同，用代表元加权与逐一枚举结果逐位一致
        if self.config.test.use_class_representatives and self.classes is not None:
            return self.classes
        return self.group

    @property
    def plan_source(self) -> GroupSpec | ClassRepresentatives:
        return self.classes if self.plan.mode in CLASS_MODES else self.group  # type: ignore[return-value]

    def naive_plan(self) -> SamplingPlan:
        return SamplingPlan(self.plan.mode, self.plan.w, include_identity=False)

    def balanced_source(self) -> GroupSpec | ClassRepresentatives:
        # 平衡置换全集加恒等元；diff-sum 下按重标记加权压缩，与逐一计算结果一致
        if not isinstance(self.stat, DiffSumStatistic):
            raise UnsupportedDesign("平衡置换演示需要两样本 diff-sum 统计量")
        if self.config.test.use_class_representatives:
            return balanced_classes(self.stat.n)
        return GroupSpec.explicit(balanced_permutations(self.stat.n).prepend_identity())

    def run(self, x: np.ndarray, rng: np.random.Generator) -> tuple[bool, float]:
        proc = self.config.test
        method = proc.method
        if method == "full":
            report = full_group_test(x, self.full_source, self.stat, self.alpha, tolerance=self.tolerance)
            return report.rejected, float(report.p_value)
        if method == "hoeffding":
            report = hoeffding_randomized_test(x, self.full_source, self.stat, self.alpha, rng, tolerance=self.tolerance)
            return report.rejected, float(report.randomized_p_value)
        if method == "monte-carlo":
            report = monte_carlo_test(x, self.null_sampler, self.stat, proc.w, self.alpha, rng, tolerance=self.tolerance)
            return report.rejected, float(report.p_value)
        if method == "coset":
            assert self.subset is not None
            report = coset_scheme_test(x, self.subset, self.stat, self.alpha, rng, tolerance=self.tolerance)
            return report.rejected, float(report.p_value)

        draw = draw_transforms(self.plan, self.plan_source, rng)
        if method == "estimate":
            estimate = estimate_pvalue(x, draw, self.stat, tolerance=self.tolerance)
            p_value = estimate.p_hat if proc.estimate == "p_hat" else estimate.p_tilde
            return p_value <= self.alpha, p_value
        if method == "randomized":
            report = randomized_exact_test(
                x, draw, self.stat, self.alpha, rng, allow_naive=proc.allow_naive, tolerance=self.tolerance
            )
            return report.rejected, float(report.randomized_p_value)
        report = random_test(x, draw, self.stat, self.alpha, allow_naive=proc.allow_naive, tolerance=self.tolerance)
        return report.rejected, float(report.p_value)


def _type1_replication(runner: ProcedureRunner, index: int) -> Outcome:
    rng = replication_rng(runner.config.master_seed, index)
    x = runner.null_sampler(rng)
    rejected, p_value = runner.run(x, rng)
    return Outcome(rejected, p_value)


class _BalancedReplicator:
    def __init__(self, runner: ProcedureRunner) -> None:
        self.runner = runner
        self.balanced = runner.balanced_source()

    def __call__(self, runner: ProcedureRunner, index: int) -> Outcome:
        rng = replication_rng(runner.config.master_seed, index)
        x = runner.null_sampler(rng)
        balanced = full_group_test(x, self.balanced, runner.stat, runner.alpha, tolerance=runner.tolerance)
        control = full_group_test(x, runner.full_source, runner.stat, runner.alpha, tolerance=runner.tolerance)
        return Outcome(balanced.rejected, float(balanced.p_value), control.rejected)


def _bonferroni_replication(runner: ProcedureRunner, index: int) -> Outcome:
    rng = replication_rng(runner.config.master_seed, index)
    hypotheses = runner.config.hypotheses
    cutoff = runner.alpha / hypotheses
    plan = runner.naive_plan()
    naive_hit = tilde_hit = False
    smallest = 1.0
    for _ in range(hypotheses):
        x = runner.null_sampler(rng)
        draw = draw_transforms(plan, runner.plan_source, rng)
        estimate = estimate_pvalue(x, draw, runner.stat, tolerance=runner.tolerance)
        naive_hit = naive_hit or estimate.p_hat <= cutoff
        tilde_hit = tilde_hit or estimate.p_tilde <= cutoff
        smallest = min(smallest, estimate.p_hat)
    return Outcome(naive_hit, smallest, tilde_hit)


Replicator = Callable[[ProcedureRunner, int], Outcome]


def _replicator(operation: str, runner: ProcedureRunner) -> Replicator:
    if operation in (TYPE1, UNIFORMITY):
        return _type1_replication
    if operation == BALANCED:
        return _BalancedReplicator(runner)
    if operation == BONFERRONI:
        return _bonferroni_replication
    raise ConfigError(f"未知的模拟类型：{operation}")


def _run_chunk(operation: str, payload: dict, start: int, stop: int) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    runner = ProcedureRunner(SimulationConfig(**payload))
    return _run_range(operation, runner, start, stop)


def _run_range(
    operation: str, runner: ProcedureRunner, start: int, stop: int
) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    replicate = _replicator(operation, runner)
    outcomes = [replicate(runner, index) for index in range(start, stop)]
    return (
        start,
        np.array([o.rejected for o in outcomes], dtype=bool),
        np.array([o.p_value for o in outcomes], dtype=float),
        np.array([o.control_rejected for o in outcomes], dtype=bool),
    )


class CalibrationPipeline:
    def __init__(self, config: SimulationConfig) -> None:
        self.config = config
        self.runner = ProcedureRunner(config)

    def run(self, operation: str) -> ReplicationTrace:
        total = self.config.replications
        chunk = self.config.runtime.chunk_size
        bounds = [(start, min(start + chunk, total)) for start in range(0, total, chunk)]
        workers = self.config.runtime.workers
        logger.info(
            "开始模拟 {operation}：{total} 次重复，{chunks} 个分块，workers={workers}",
            operation=operation,
            total=total,
            chunks=len(bounds),
            workers=workers,
        )
        results: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]] = []
        progress = tqdm(total=len(bounds), desc=operation, unit="chunk", leave=False)
        if workers <= 1:
            for start, stop in bounds:
                results.append(_run_range(operation, self.runner, start, stop))
                progress.update()
        else:
            payload = self.config.model_dump()
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = [executor.submit(_run_chunk, operation, payload, start, stop) for start, stop in bounds]
                for future in as_completed(futures):
                    results.append(future.result())
                    progress.update()
        progress.close()
        results.sort(key=lambda item: item[0])
        return ReplicationTrace(
            rejected=np.concatenate([r[1] for r in results]),
            p_values=np.concatenate([r[2] for r in results]),
            control_rejected=np.concatenate([r[3] for r in results]),
        )

    def summarize(
        self,
        operation: str,
        rejected: np.ndarray,
        p_values: Optional[np.ndarray] = None,
        cutoffs: Optional[list[float]] = None,
    ) -> SimulationReport:
        replications = int(rejected.shape[0])
        rejections = int(rejected.sum())
        rate = rejections / replications
        exceedance: list[ExceedanceRow] = []
        ks_distance = None
        if p_values is not None:
            for cutoff in cutoffs or []:
                exceedance.append(ExceedanceRow(cutoff=cutoff, rate=float(np.mean(p_values <= cutoff))))
            ks_distance = float(sps.kstest(p_values, "uniform").statistic)
        return SimulationReport(
            operation=operation,
            replications=replications,
            rejections=rejections,
            rejection_rate=rate,
            standard_error=math.sqrt(rate * (1.0 - rate) / replications),
            exceedance=exceedance,
            ks_distance=ks_distance,
        )

    def export_trace(self, trace: ReplicationTrace, path: Path) -> None:
        frame = pd.DataFrame(
            {
                "replication": np.arange(trace.replications),
                "p_value": trace.p_values,
                "decision": np.where(trace.rejected, "reject", "retain"),
            }
        )
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
        logger.info("逐次结果写入 {path}", path=path)


def _execute(
    config: SimulationConfig,
    operation: str,
    trace_path: Optional[Path],
    build: Callable[[CalibrationPipeline, ReplicationTrace], SimulationReport],
) -> SimulationReport:
    started = time.perf_counter()
    pipeline = CalibrationPipeline(config)
    trace = pipeline.run(operation)
    report = build(pipeline, trace)
    report.config = config.echo()
    report.runtime_seconds = time.perf_counter() - started
    if trace_path is not None:
        pipeline.export_trace(trace, trace_path)
    logger.info(
        "{operation} 完成：拒绝率 {rate:.5f} ± {se:.5f}，耗时 {seconds:.1f}s",
        operation=operation,
        rate=report.rejection_rate,
        se=report.standard_error,
        seconds=report.runtime_seconds,
    )
    return report


def type1_experiment(config: SimulationConfig, *, trace_path: Optional[Path] = None) -> SimulationReport:
    """N 次独立重复：从零模型生成数据、执行配置的检验、记录决策，报告拒绝率 ± SE。"""

    def build(pipeline: CalibrationPipeline, trace: ReplicationTrace) -> SimulationReport:
        return pipeline.summarize(TYPE1, trace.rejected, trace.p_values, config.cutoffs)

    return _execute(config, TYPE1, trace_path, build)


def pvalue_uniformity(config: SimulationConfig, *, trace_path: Optional[Path] = None) -> SimulationReport:
    """p 值的经验分布：相对均匀分布的 KS 距离与各 cutoff 处的 P̂(p ≤ c)。"""
    cutoffs = config.cutoffs or DEFAULT_UNIFORMITY_CUTOFFS

    def build(pipeline: CalibrationPipeline, trace: ReplicationTrace) -> SimulationReport:
        return pipeline.summarize(UNIFORMITY, trace.rejected, trace.p_values, cutoffs)

    return _execute(config, UNIFORMITY, trace_path, build)


def balanced_permutation_demo(config: SimulationConfig, *, trace_path: Optional[Path] = None) -> SimulationReport:
    """用平衡置换（加恒等元）代替群做基本检验，并以完整群在同一数据上作对照。"""
    runner = ProcedureRunner(config)
    if not isinstance(runner.stat, DiffSumStatistic):
        raise UnsupportedDesign("平衡置换演示需要两样本 diff-sum 统计量")
    axioms = verify_group_axioms(balanced_permutations(runner.stat.n).prepend_identity())
    logger.warning("平衡置换集合不是群（{size} 个元素），以下结果仅作反例演示", size=axioms.size)

    def build(pipeline: CalibrationPipeline, trace: ReplicationTrace) -> SimulationReport:
        report = pipeline.summarize(BALANCED, trace.rejected)
        report.control = pipeline.summarize(f"{BALANCED}-control", trace.control_rejected)
        report.binomial_pvalue = float(
            sps.binomtest(report.rejections, report.replications, config.test.alpha, alternative="greater").pvalue
        )
        report.axioms = axioms
        return report

    return _execute(config, BALANCED, trace_path, build)


def bonferroni_interaction_demo(config: SimulationConfig, *, trace_path: Optional[Path] = None) -> SimulationReport:
    """H 个零假设各用朴素 p̂ 与阈值 α/H 比较的族错误率；对照组使用 p̃。"""

    def build(pipeline: CalibrationPipeline, trace: ReplicationTrace) -> SimulationReport:
        report = pipeline.summarize(BONFERRONI, trace.rejected)
        report.control = pipeline.summarize(f"{BONFERRONI}-control", trace.control_rejected)
        return report

    return _execute(config, BONFERRONI, trace_path, build)


OPERATIONS: dict[str, Callable[..., SimulationReport]] = {
    TYPE1: type1_experiment,
    UNIFORMITY: pvalue_uniformity,
    BALANCED: balanced_permutation_demo,
    BONFERRONI: bonferroni_interaction_demo,
}

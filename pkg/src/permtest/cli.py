from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from .config import load_config
from .errors import InvalidParameter, PermTestRuntimeError, PermTestUsageError, UnsupportedDesign
from .exact_test import ClassRepresentatives, class_representatives, full_group_test, hoeffding_randomized_test
from .groups import FULL_SYMMETRIC, TWO_SAMPLE, ElementBatch, GroupSpec, balanced_permutations, verify_group_axioms
from .loaders import load_data, load_transforms
from .models import PValueReport, TestReport
from .random_test import (
    coset_scheme_test,
    estimate_pvalue,
    pvalue_upper_bound,
    pvalue_with_replacement,
    pvalue_without_replacement,
    random_test,
    randomized_exact_test,
    randomized_pvalue,
)
from .sampling import CLASS_MODES, SamplingMode, SamplingPlan, draw_transforms
from .simulation import OPERATIONS, TYPE1
from .statistics import DiffSumStatistic, Statistic, parse_statistic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_NOT_A_GROUP = 3

LOG_LEVELS = ["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"]
SCHEMES = ["full", "with-repl", "without-repl", "class-with-repl", "class-without-repl", "coset", "naive"]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: 错误：{message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, required=True, help="数据 CSV：单行逗号分隔或每行一个数")
    parser.add_argument("--stat", required=True, help="统计量，如 diff-sum:n=2、mean、abs-mean、sum-first:k=3")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--group", help="变换群，如 full-symmetric:4、two-sample:2、sign-flip:6、cyclic:5")
    source.add_argument("--transforms-file", type=Path, help="显式变换列表 JSON")
    parser.add_argument("--scheme", choices=SCHEMES, default="full", help="全群或随机抽样方案")
    parser.add_argument("--w", type=int, default=1000, help="抽取的变换个数（含恒等元）")
    parser.add_argument("--seed", type=int, help="随机种子；随机方案与随机化检验必填")
    parser.add_argument("--randomized", choices=["on", "off"], default="off", help="边界处按概率 a 拒绝")
    parser.add_argument("--allow-naive", action="store_true", help="允许不含恒等元的朴素方案（仅演示）")
    parser.add_argument("--tie-tolerance", type=float, default=0.0, help="判定平局的绝对容差，默认精确比较")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="permtest",
        description="基于变换群的精确置换检验与随机置换检验",
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        help="stderr 日志级别，默认 INFO；simulate 缺省时使用配置中的 runtime.log_level",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="执行一次检验，输出 TestReport JSON")
    _add_data_arguments(test)
    test.add_argument("--alpha", type=float, required=True, help="显著性水平，位于 [0, 1)")
    test.add_argument("--record-draws", action="store_true", help="在报告中记录抽到的变换")

    pvalue = sub.add_parser("pvalue", help="计算 p 值")
    pvalue.add_argument("--formula", choices=["without-repl", "with-repl"], help="直接计算 P(B ≤ b) 的闭式 p 值")
    pvalue.add_argument("--b", type=int, help="观测到的 B")
    pvalue.add_argument("--m", type=int, help="等价类个数（with-repl 公式）")
    pvalue.add_argument("--data", type=Path)
    pvalue.add_argument("--stat")
    source = pvalue.add_mutually_exclusive_group()
    source.add_argument("--group")
    source.add_argument("--transforms-file", type=Path)
    pvalue.add_argument("--scheme", choices=SCHEMES, default="full")
    pvalue.add_argument("--w", type=int, default=1000)
    pvalue.add_argument("--seed", type=int)
    pvalue.add_argument("--randomized", choices=["on", "off"], default="off")
    pvalue.add_argument("--allow-naive", action="store_true")
    pvalue.add_argument("--tie-tolerance", type=float, default=0.0)

    simulate = sub.add_parser("simulate", help="蒙特卡洛校准实验")
    simulate.add_argument("--config", type=Path, required=True, help="模拟配置（JSON 或 YAML）")
    simulate.add_argument("--out", type=Path, help="报告 JSON 输出路径，缺省写到 stdout")
    simulate.add_argument("--jobs", type=int, help="并行进程数，覆盖 runtime.workers")
    simulate.add_argument("--trace", type=Path, help="逐次重复结果 CSV 输出路径")
    simulate.add_argument("--demo", choices=sorted(OPERATIONS), default=TYPE1, help="实验类型，默认 type1")

    verify = sub.add_parser("verify-group", help="检查变换集合是否满足群公理")
    target = verify.add_mutually_exclusive_group(required=True)
    target.add_argument("--transforms-file", type=Path)
    target.add_argument("--group")
    target.add_argument("--balanced", type=int, help="2n 个下标上的平衡置换，参数为 n")
    return parser


@dataclass
class _Inputs:
    x: np.ndarray
    stat: Statistic
    group: Optional[GroupSpec]
    transforms: Optional[ElementBatch]
    scheme: str
    w: int
    seed: Optional[int]
    randomized: bool
    allow_naive: bool
    tolerance: float

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def full_source(self) -> GroupSpec:
        # --transforms-file 给出的集合按显式群处理，可枚举也可均匀抽样
        if self.group is not None:
            return self.group
        if self.transforms is not None:
            return GroupSpec.explicit(self.transforms)
        raise InvalidParameter("需要 --group 或 --transforms-file")

    def classes(self) -> ClassRepresentatives:
        if not isinstance(self.stat, DiffSumStatistic):
            raise UnsupportedDesign("按类抽样只支持两样本 diff-sum 设计")
        if self.group is None or self.group.family not in (TWO_SAMPLE, FULL_SYMMETRIC):
            raise UnsupportedDesign(f"--scheme {self.scheme} 需要 --group two-sample:n 或 full-symmetric:2n")
        if self.group.dimension != 2 * self.stat.n:
            raise InvalidParameter(f"群 {self.group} 与 diff-sum:n={self.stat.n} 的维度不一致")
        return class_representatives(self.stat.n)

    def coset_subset(self, rng: np.random.Generator) -> ElementBatch:
        if self.transforms is not None:
            return self.transforms
        plan = SamplingPlan(SamplingMode.WITHOUT_REPLACEMENT, self.w, include_identity=False)
        return draw_transforms(plan, self.full_source(), rng).elements

    def draw(self, rng: np.random.Generator):
        plan = SamplingPlan.from_scheme(self.scheme, self.w)
        source = self.classes() if plan.mode in CLASS_MODES else self.full_source()
        return draw_transforms(plan, source, rng, seed=self.seed)


def _inputs(args: argparse.Namespace, *, guard_naive: bool = True) -> _Inputs:
    if args.data is None or args.stat is None:
        raise InvalidParameter("需要 --data 与 --stat")
    randomized = args.randomized == "on"
    if (args.scheme != "full" or randomized) and args.seed is None:
        raise InvalidParameter(f"--scheme {args.scheme}{' --randomized on' if randomized else ''} 需要 --seed 以保证可复现")
    if guard_naive and args.scheme == "naive" and not args.allow_naive:
        raise InvalidParameter("naive 方案不含恒等元，检验水平无法保证；仅作演示时请加 --allow-naive")
    return _Inputs(
        x=load_data(args.data),
        stat=parse_statistic(args.stat),
        group=GroupSpec.parse(args.group) if args.group else None,
        transforms=load_transforms(args.transforms_file) if args.transforms_file else None,
        scheme=args.scheme,
        w=args.w,
        seed=args.seed,
        randomized=randomized,
        allow_naive=args.allow_naive,
        tolerance=args.tie_tolerance,
    )


def run_test(args: argparse.Namespace) -> int:
    inputs = _inputs(args)
    rng = inputs.rng
    alpha = args.alpha
    tolerance = inputs.tolerance
    report: TestReport
    if inputs.scheme == "full":
        source = inputs.full_source()
        if inputs.randomized:
            report = hoeffding_randomized_test(inputs.x, source, inputs.stat, alpha, rng, tolerance=tolerance)
            report.seed = inputs.seed
        else:
            report = full_group_test(inputs.x, source, inputs.stat, alpha, tolerance=tolerance)
    elif inputs.scheme == "coset":
        subset = inputs.coset_subset(rng)
        report = coset_scheme_test(
            inputs.x, subset, inputs.stat, alpha, rng,
            tolerance=tolerance, record_draws=args.record_draws, seed=inputs.seed,
        )
    else:
        draw = inputs.draw(rng)
        if inputs.randomized:
            report = randomized_exact_test(
                inputs.x, draw, inputs.stat, alpha, rng,
                allow_naive=inputs.allow_naive, tolerance=tolerance, record_draws=args.record_draws,
            )
        else:
            report = random_test(
                inputs.x, draw, inputs.stat, alpha,
                allow_naive=inputs.allow_naive, tolerance=tolerance, record_draws=args.record_draws,
            )
    sys.stdout.write(report.to_json() + "\n")
    logger.info(
        "{method} 检验：T(x)={t:.6g}，阈值 T^({k})={thr:.6g}，p={p}，结论 {decision}",
        method=report.method,
        t=report.statistic,
        k=report.threshold_index,
        thr=report.threshold_value,
        p=report.p_value,
        decision=report.decision.value if not report.rejected else "reject",
    )
    return EXIT_OK


def run_pvalue(args: argparse.Namespace) -> int:
    if args.formula:
        if args.b is None:
            raise InvalidParameter("--formula 需要 --b 与 --w")
        if args.formula == "without-repl":
            report = PValueReport(method="formula-without-repl", b=args.b, w=args.w,
                                  p_value=pvalue_without_replacement(args.b, args.w))
        else:
            if args.m is None:
                raise InvalidParameter("with-repl 公式需要 --m")
            report = PValueReport(method="formula-with-repl", b=args.b, w=args.w, m=args.m,
                                  p_value=pvalue_with_replacement(args.b, args.w, args.m))
        sys.stdout.write(report.to_json() + "\n")
        return EXIT_OK

    # p̂ 与 p̃ 只是估计，naive 方案无需 --allow-naive
    inputs = _inputs(args, guard_naive=False)
    rng = inputs.rng
    if inputs.scheme == "full":
        source = inputs.full_source()
        exact = full_group_test(inputs.x, source, inputs.stat, 0.0, tolerance=inputs.tolerance)
        report = PValueReport(method="full", statistic=exact.statistic, p_value=exact.p_value,
                              group_size=exact.group_size, seed=inputs.seed)
        if inputs.randomized:
            hoeffding = hoeffding_randomized_test(inputs.x, source, inputs.stat, 0.0, rng, tolerance=inputs.tolerance)
            report.randomized_p_value = hoeffding.randomized_p_value
            report.u = hoeffding.u
    elif inputs.scheme == "coset":
        subset = inputs.coset_subset(rng)
        coset = coset_scheme_test(inputs.x, subset, inputs.stat, 0.0, rng, tolerance=inputs.tolerance)
        report = PValueReport(method="coset", statistic=coset.statistic, p_value=coset.p_value,
                              w=coset.w, seed=inputs.seed)
    elif inputs.scheme == "naive":
        draw = inputs.draw(rng)
        estimate = estimate_pvalue(inputs.x, draw, inputs.stat, tolerance=inputs.tolerance)
        report = PValueReport(method="naive", p_hat=estimate.p_hat, p_tilde=estimate.p_tilde,
                              b=estimate.b, w=estimate.w, seed=inputs.seed)
    else:
        draw = inputs.draw(rng)
        bound = pvalue_upper_bound(inputs.x, draw, inputs.stat, tolerance=inputs.tolerance)
        report = PValueReport(method=inputs.scheme, p_value=bound, upper_bound=bound, w=draw.w, seed=inputs.seed)
        if inputs.randomized:
            u = float(rng.random())
            report.randomized_p_value = randomized_pvalue(inputs.x, draw, inputs.stat, rng, u=u,
                                                          tolerance=inputs.tolerance)
            report.u = u
    sys.stdout.write(report.to_json() + "\n")
    logger.info("{method} p 值计算完成", method=report.method)
    return EXIT_OK


def run_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.log_level is None:
        _configure_logging(config.runtime.log_level.upper())
    if args.jobs is not None:
        config.runtime.workers = max(args.jobs, 1)
    report = OPERATIONS[args.demo](config, trace_path=args.trace)
    payload = report.to_json() + "\n"
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(payload, encoding="utf-8")
        logger.info("报告写入 {path}", path=args.out)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def run_verify_group(args: argparse.Namespace) -> int:
    if args.transforms_file:
        elements = load_transforms(args.transforms_file)
    elif args.group:
        elements = GroupSpec.parse(args.group).enumerate()
    else:
        elements = balanced_permutations(args.balanced)
    report = verify_group_axioms(elements)
    sys.stdout.write(report.to_json() + "\n")
    if report.is_group:
        logger.info("{size} 个变换构成群", size=report.size)
        return EXIT_OK
    logger.warning(
        "不是群：恒等元 {identity}，复合封闭 {closed}，求逆封闭 {inverse}",
        identity=report.contains_identity,
        closed=report.closed_under_composition,
        inverse=report.closed_under_inverse,
    )
    return EXIT_NOT_A_GROUP


COMMANDS = {
    "test": run_test,
    "pvalue": run_pvalue,
    "simulate": run_simulate,
    "verify-group": run_verify_group,
}


def _configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.log_level or "INFO")
    try:
        return COMMANDS[args.command](args)
    except PermTestUsageError as exc:
        logger.error(str(exc))
        return EXIT_USAGE
    except PermTestRuntimeError as exc:
        logger.error(str(exc))
        return EXIT_RUNTIME


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()

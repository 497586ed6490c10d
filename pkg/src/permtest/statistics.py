"""检验统计量 T: 𝒳 → ℝ 及其在一批变换上的批量求值。

自定义统计量：继承 :class:`Statistic` 并实现 ``evaluate_rows``，可用 :func:`register_statistic`
注册后通过字符串解析使用。
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DimensionError, SpecParseError
from .groups import ElementBatch, GroupElement, as_data_vector


def _exact_row_sum(block: np.ndarray) -> np.ndarray:
    # 先排序再求和：同一多重集的任意排列得到逐位相同的和，等价类内的平局才能精确重现
    return np.sort(block, axis=1).sum(axis=1)


class Statistic(ABC):
    name: str = ""

    @abstractmethod
    def evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        """对矩阵每一行（一个变换后的数据向量）求统计量。"""

    def check_dimension(self, dimension: int) -> None:
        return None

    def spec_string(self) -> str:
        return self.name

    def __call__(self, x: np.ndarray) -> float:
        return eval_statistic(self, x)


@dataclass(frozen=True)
class DiffSumStatistic(Statistic):
    """两样本差和：前 n 个为病例，n+1..2n 为对照，T = Σ病例 − Σ对照。"""

    n: int
    name = "diff-sum"

    def check_dimension(self, dimension: int) -> None:
        if not 0 < self.n < dimension or dimension != 2 * self.n:
            raise DimensionError(f"diff-sum:n={self.n} 需要长度 {2 * self.n} 的数据，收到 {dimension}")

    def evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        return _exact_row_sum(matrix[:, : self.n]) - _exact_row_sum(matrix[:, self.n :])

    def spec_string(self) -> str:
        return f"diff-sum:n={self.n}"


@dataclass(frozen=True)
class MeanStatistic(Statistic):
    name = "mean"

    def evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        return _exact_row_sum(matrix) / matrix.shape[1]


@dataclass(frozen=True)
class AbsMeanStatistic(Statistic):
    """均值的绝对值，用于符号翻转设计。"""

    name = "abs-mean"

    def evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        return np.abs(_exact_row_sum(matrix) / matrix.shape[1])


@dataclass(frozen=True)
class SumFirstStatistic(Statistic):
    k: int
    name = "sum-first"

    def check_dimension(self, dimension: int) -> None:
        if not 0 < self.k <= dimension:
            raise DimensionError(f"sum-first:k={self.k} 超出数据长度 {dimension}")

    def evaluate_rows(self, matrix: np.ndarray) -> np.ndarray:
        return _exact_row_sum(matrix[:, : self.k])

    def spec_string(self) -> str:
        return f"sum-first:k={self.k}"


StatisticFactory = Callable[[dict[str, int]], Statistic]

_REGISTRY: dict[str, StatisticFactory] = {
    "diff-sum": lambda params: DiffSumStatistic(params["n"]),
    "mean": lambda params: MeanStatistic(),
    "abs-mean": lambda params: AbsMeanStatistic(),
    "sum-first": lambda params: SumFirstStatistic(params["k"]),
}


def register_statistic(name: str) -> Callable[[StatisticFactory], StatisticFactory]:
    def decorator(factory: StatisticFactory) -> StatisticFactory:
        _REGISTRY[name] = factory
        return factory

    return decorator


def parse_statistic(text: str) -> Statistic:
    """解析 ``diff-sum:n=<int>``、``mean``、``abs-mean``、``sum-first:k=<int>``。"""
    name, _, raw_params = text.strip().partition(":")
    factory = _REGISTRY.get(name.strip().lower())
    if factory is None:
        raise SpecParseError(f"未知的统计量：{name}")
    params: dict[str, int] = {}
    for item in filter(None, (part.strip() for part in raw_params.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise SpecParseError(f"统计量参数格式应为 key=value：{item}")
        try:
            params[key.strip()] = int(value)
        except ValueError as exc:
            raise SpecParseError(f"统计量参数必须为整数：{item}") from exc
    try:
        return factory(params)
    except KeyError as exc:
        raise SpecParseError(f"统计量 {name} 缺少参数 {exc.args[0]}") from exc


def eval_statistic(stat: Statistic, x: np.ndarray) -> float:
    x = as_data_vector(x)
    stat.check_dimension(x.shape[0])
    return float(stat.evaluate_rows(x[None, :])[0])


@dataclass(frozen=True, eq=False)
class OrbitStatistics:
    raw: np.ndarray
    sorted: np.ndarray
    original: float


def orbit_statistics(
    stat: Statistic,
    x: np.ndarray,
    elements: Union[ElementBatch, Sequence[GroupElement]],
) -> OrbitStatistics:
    """按输入顺序计算 T(g_j x)，并给出升序（稳定排序）结果与 T(x)。"""
    x = as_data_vector(x)
    stat.check_dimension(x.shape[0])
    batch = ElementBatch.coerce(elements)
    raw = stat.evaluate_rows(batch.apply(x))
    return OrbitStatistics(raw=raw, sorted=np.sort(raw, kind="stable"), original=eval_statistic(stat, x))


@dataclass(frozen=True, eq=False)
class OrbitView:
    """轨道 O_x 的一个视图：基点、群元及对应统计量缓存。"""

    base: np.ndarray
    elements: ElementBatch
    values: np.ndarray

    @classmethod
    def build(cls, stat: Statistic, x: np.ndarray, elements: Union[ElementBatch, Sequence[GroupElement]]) -> "OrbitView":
        batch = ElementBatch.coerce(elements)
        stats = orbit_statistics(stat, x, batch)
        return cls(base=as_data_vector(x), elements=batch, values=stats.raw)

    def points(self) -> np.ndarray:
        return self.elements.apply(self.base)


@dataclass(frozen=True)
class Tally:
    greater: int
    equal: int

    @property
    def at_least(self) -> int:
        return self.greater + self.equal


def tally(
    values: np.ndarray,
    reference: float,
    *,
    tolerance: float = 0.0,
    multiplicity: Union[int, np.ndarray] = 1,
) -> Tally:
    """统计严格大于与等于参考值的个数；tolerance 为可选的绝对容差（默认精确比较）。

    multiplicity 为每个取值的副本数，可以是整数或与 values 等长的权重数组。
    """
    equal = np.abs(values - reference) <= tolerance
    greater = (values > reference) & ~equal
    if np.ndim(multiplicity) == 0:
        return Tally(greater=int(greater.sum()) * int(multiplicity), equal=int(equal.sum()) * int(multiplicity))
    weights = np.asarray(multiplicity, dtype=np.int64)
    return Tally(greater=int(weights[greater].sum()), equal=int(weights[equal].sum()))

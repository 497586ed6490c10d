"""有限变换群：群元表示、复合与求逆、作用于数据、枚举、均匀抽样以及群公理校验。

约定：置换采用一行记法，作用为 ``y[i] = x[π(i)]``，因此
``apply(compose(g, h), x) == apply(g, apply(h, x))``。
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np
from loguru import logger

from .errors import (
    DataFormatError,
    DimensionError,
    GroupTooLarge,
    InvalidComposition,
    SpecParseError,
    UnsupportedDesign,
)
from .models import AxiomReport

DEFAULT_ENUMERATION_CAP = 10_000_000
DEFAULT_EXHAUSTIVE_LIMIT = 10_000
DEFAULT_SAMPLED_PAIRS = 200_000

PERMUTATION = "permutation"
SIGN = "sign"
SHIFT = "shift"


def as_data_vector(values: Iterable[float] | np.ndarray) -> np.ndarray:
    """把输入转换为只读的一维 float 数组，并检查长度与有限性。"""
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        array = array.reshape(-1)
    if array.size < 1:
        raise DataFormatError("数据向量至少需要一个元素")
    if not np.all(np.isfinite(array)):
        raise DataFormatError("数据向量包含 NaN 或无穷值")
    array = array.copy()
    array.setflags(write=False)
    return array


class ElementAction(ABC):
    """某一类群元在批量行表示下的代数运算。

    每个群元用一行整数表示：置换与符号翻转为长度 n 的行，循环平移为长度 1 的行（偏移量）。
    """

    kind: str

    @abstractmethod
    def identity_row(self, dimension: int) -> np.ndarray:
        ...

    @abstractmethod
    def compose_rows(self, left: np.ndarray, right: np.ndarray, dimension: int) -> np.ndarray:
        """逐行计算 left∘right（先作用 right，再作用 left），支持广播。"""

    @abstractmethod
    def inverse_rows(self, rows: np.ndarray, dimension: int) -> np.ndarray:
        ...

    @abstractmethod
    def apply_rows(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        """返回形状 (len(rows), len(x)) 的变换后数据矩阵。"""

    @abstractmethod
    def validate_row(self, row: np.ndarray, dimension: int) -> None:
        ...

    def code_radix(self, dimension: int) -> int:
        return max(dimension, 2)

    def to_digits(self, rows: np.ndarray) -> np.ndarray:
        return rows


class PermutationAction(ElementAction):
    kind = PERMUTATION

    def identity_row(self, dimension: int) -> np.ndarray:
        return np.arange(dimension, dtype=np.intp)

    def compose_rows(self, left: np.ndarray, right: np.ndarray, dimension: int) -> np.ndarray:
        left, right = np.broadcast_arrays(np.atleast_2d(left), np.atleast_2d(right))
        return np.take_along_axis(right, left, axis=1)

    def inverse_rows(self, rows: np.ndarray, dimension: int) -> np.ndarray:
        return np.argsort(np.atleast_2d(rows), axis=1).astype(np.intp)

    def apply_rows(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        return x[np.atleast_2d(rows)]

    def validate_row(self, row: np.ndarray, dimension: int) -> None:
        if row.shape != (dimension,) or not np.array_equal(np.sort(row), np.arange(dimension)):
            raise DataFormatError(f"不是 0..{dimension - 1} 上的置换：{row.tolist()}")


class SignFlipAction(ElementAction):
    kind = SIGN

    def identity_row(self, dimension: int) -> np.ndarray:
        return np.ones(dimension, dtype=np.intp)

    def compose_rows(self, left: np.ndarray, right: np.ndarray, dimension: int) -> np.ndarray:
        return np.atleast_2d(left) * np.atleast_2d(right)

    def inverse_rows(self, rows: np.ndarray, dimension: int) -> np.ndarray:
        return np.atleast_2d(rows).copy()

    def apply_rows(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.atleast_2d(rows) * x

    def validate_row(self, row: np.ndarray, dimension: int) -> None:
        if row.shape != (dimension,) or not np.all(np.isin(row, (-1, 1))):
            raise DataFormatError(f"符号掩码只能包含 ±1：{row.tolist()}")

    def code_radix(self, dimension: int) -> int:
        return 2

    def to_digits(self, rows: np.ndarray) -> np.ndarray:
        return (rows < 0).astype(np.int64)


class ShiftAction(ElementAction):
    kind = SHIFT

    def identity_row(self, dimension: int) -> np.ndarray:
        return np.zeros(1, dtype=np.intp)

    def compose_rows(self, left: np.ndarray, right: np.ndarray, dimension: int) -> np.ndarray:
        return (np.atleast_2d(left) + np.atleast_2d(right)) % dimension

    def inverse_rows(self, rows: np.ndarray, dimension: int) -> np.ndarray:
        return (-np.atleast_2d(rows)) % dimension

    def apply_rows(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        index = (np.arange(x.shape[0]) + np.atleast_2d(rows)) % x.shape[0]
        return x[index]

    def validate_row(self, row: np.ndarray, dimension: int) -> None:
        if row.shape != (1,) or not 0 <= int(row[0]) < dimension:
            raise DataFormatError(f"循环平移量必须在 0..{dimension - 1} 内：{row.tolist()}")


ACTIONS: dict[str, ElementAction] = {
    PERMUTATION: PermutationAction(),
    SIGN: SignFlipAction(),
    SHIFT: ShiftAction(),
}


def action_for(kind: str) -> ElementAction:
    try:
        return ACTIONS[kind]
    except KeyError as exc:
        raise SpecParseError(f"未知的群元类型：{kind}") from exc


@dataclass(frozen=True)
class GroupElement:
    """不可变群元；相等即载荷相等。"""

    kind: str
    payload: tuple[int, ...]
    dimension: int

    def __post_init__(self) -> None:
        action_for(self.kind).validate_row(np.asarray(self.payload, dtype=np.intp), self.dimension)

    @classmethod
    def identity(cls, kind: str, dimension: int) -> "GroupElement":
        return cls.from_row(kind, action_for(kind).identity_row(dimension), dimension)

    @classmethod
    def permutation(cls, one_line: Sequence[int]) -> "GroupElement":
        return cls(PERMUTATION, tuple(int(v) for v in one_line), len(one_line))

    @classmethod
    def sign_mask(cls, mask: Sequence[int]) -> "GroupElement":
        return cls(SIGN, tuple(int(v) for v in mask), len(mask))

    @classmethod
    def shift(cls, offset: int, dimension: int) -> "GroupElement":
        return cls(SHIFT, (int(offset) % dimension,), dimension)

    @classmethod
    def from_row(cls, kind: str, row: np.ndarray, dimension: int) -> "GroupElement":
        return cls(kind, tuple(int(v) for v in np.asarray(row).reshape(-1)), dimension)

    @property
    def row(self) -> np.ndarray:
        return np.asarray(self.payload, dtype=np.intp)

    @property
    def is_identity(self) -> bool:
        return np.array_equal(self.row, action_for(self.kind).identity_row(self.dimension))

    def compose(self, other: "GroupElement") -> "GroupElement":
        if self.kind != other.kind or self.dimension != other.dimension:
            raise InvalidComposition(
                f"无法复合 {self.kind}({self.dimension}) 与 {other.kind}({other.dimension})"
            )
        action = action_for(self.kind)
        return GroupElement.from_row(
            self.kind, action.compose_rows(self.row, other.row, self.dimension)[0], self.dimension
        )

    def inverse(self) -> "GroupElement":
        action = action_for(self.kind)
        return GroupElement.from_row(self.kind, action.inverse_rows(self.row, self.dimension)[0], self.dimension)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionError(f"群元维度 {self.dimension} 与数据长度 {x.shape[0]} 不一致")
        return action_for(self.kind).apply_rows(self.row, x)[0]

    def to_json(self) -> list[int]:
        return list(self.payload)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    return g.compose(h)


def inverse(g: GroupElement) -> GroupElement:
    return g.inverse()


def apply(g: GroupElement, x: np.ndarray) -> np.ndarray:
    return g.apply(x)


@dataclass(frozen=True, eq=False)
class ElementBatch:
    """同类同维群元的有序批量表示，每行一个群元。"""

    kind: str
    rows: np.ndarray
    dimension: int

    def __post_init__(self) -> None:
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.intp))
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_elements(cls, elements: Sequence[GroupElement]) -> "ElementBatch":
        if not elements:
            raise DataFormatError("群元列表为空")
        first = elements[0]
        for element in elements:
            if element.kind != first.kind or element.dimension != first.dimension:
                raise InvalidComposition("群元列表中类型或维度不一致")
        return cls(first.kind, np.array([e.payload for e in elements], dtype=np.intp), first.dimension)

    @classmethod
    def coerce(cls, elements: Union["ElementBatch", Sequence[GroupElement]]) -> "ElementBatch":
        if isinstance(elements, ElementBatch):
            return elements
        return cls.from_elements(list(elements))

    @property
    def action(self) -> ElementAction:
        return action_for(self.kind)

    @property
    def identity_row(self) -> np.ndarray:
        return self.action.identity_row(self.dimension)

    def __len__(self) -> int:
        return self.rows.shape[0]

    def __getitem__(self, index: int) -> GroupElement:
        return GroupElement.from_row(self.kind, self.rows[index], self.dimension)

    def __iter__(self) -> Iterator[GroupElement]:
        for index in range(len(self)):
            yield self[index]

    def identity_mask(self) -> np.ndarray:
        return np.all(self.rows == self.identity_row, axis=1)

    def starts_with_identity(self) -> bool:
        return bool(len(self) and self.identity_mask()[0])

    def contains_identity(self) -> bool:
        return bool(self.identity_mask().any())

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionError(f"群元维度 {self.dimension} 与数据长度 {x.shape[0]} 不一致")
        return self.action.apply_rows(self.rows, x)

    def compose_right(self, element: GroupElement) -> "ElementBatch":
        """逐行计算 row∘element。"""
        self._check_compatible(element)
        return ElementBatch(self.kind, self.action.compose_rows(self.rows, element.row, self.dimension), self.dimension)

    def take(self, indices: np.ndarray) -> "ElementBatch":
        return ElementBatch(self.kind, self.rows[np.asarray(indices, dtype=np.intp)], self.dimension)

    def prepend_identity(self) -> "ElementBatch":
        rows = np.vstack([self.identity_row[None, :], self.rows])
        return ElementBatch(self.kind, rows, self.dimension)

    def to_json(self) -> list[list[int]]:
        return self.rows.tolist()

    def _check_compatible(self, element: GroupElement) -> None:
        if element.kind != self.kind or element.dimension != self.dimension:
            raise InvalidComposition(
                f"无法复合 {self.kind}({self.dimension}) 与 {element.kind}({element.dimension})"
            )


FULL_SYMMETRIC = "full-symmetric"
TWO_SAMPLE = "two-sample"
SIGN_FLIP = "sign-flip"
CYCLIC = "cyclic"
EXPLICIT = "explicit"

_FAMILY_ALIASES = {
    "full-symmetric": FULL_SYMMETRIC,
    "symmetric": FULL_SYMMETRIC,
    "two-sample": TWO_SAMPLE,
    "two-sample-relabeling": TWO_SAMPLE,
    "sign-flip": SIGN_FLIP,
    "cyclic": CYCLIC,
}


@dataclass(frozen=True)
class GroupSpec:
    """有限变换群的描述。

    two-sample(n) 即 2n 个下标上的对称群，配合带病例/对照标签的统计量使用。
    """

    family: str
    n: int = 0
    elements: ElementBatch | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.family == EXPLICIT:
            if self.elements is None or len(self.elements) == 0:
                raise DataFormatError("explicit 群需要非空的群元列表")
        elif self.family in _FAMILY_ALIASES.values():
            if self.n < 1:
                raise SpecParseError(f"{self.family} 的规模必须为正整数，收到 {self.n}")
        else:
            raise SpecParseError(f"未知的群族：{self.family}")

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """解析 ``family:n`` 形式，例如 ``full-symmetric:4``、``sign-flip:6``。"""
        name, _, params = text.strip().partition(":")
        family = _FAMILY_ALIASES.get(name.strip().lower())
        if family is None:
            raise SpecParseError(f"未知的群族：{name}")
        value = params.strip()
        if "=" in value:
            value = value.split("=", 1)[1]
        try:
            n = int(value)
        except ValueError as exc:
            raise SpecParseError(f"群规模参数无效：{text}") from exc
        return cls(family, n)

    @classmethod
    def explicit(cls, elements: Union[ElementBatch, Sequence[GroupElement]]) -> "GroupSpec":
        return cls(EXPLICIT, 0, ElementBatch.coerce(elements))

    @property
    def kind(self) -> str:
        if self.family == EXPLICIT:
            assert self.elements is not None
            return self.elements.kind
        if self.family == SIGN_FLIP:
            return SIGN
        if self.family == CYCLIC:
            return SHIFT
        return PERMUTATION

    @property
    def dimension(self) -> int:
        if self.family == EXPLICIT:
            assert self.elements is not None
            return self.elements.dimension
        if self.family == TWO_SAMPLE:
            return 2 * self.n
        return self.n

    @property
    def cardinality(self) -> int:
        if self.family == EXPLICIT:
            assert self.elements is not None
            return len(self.elements)
        if self.family in (FULL_SYMMETRIC, TWO_SAMPLE):
            return math.factorial(self.dimension)
        if self.family == SIGN_FLIP:
            return 2**self.n
        return self.n

    @property
    def identity(self) -> GroupElement:
        return GroupElement.identity(self.kind, self.dimension)

    def __str__(self) -> str:
        if self.family == EXPLICIT:
            return f"explicit:{self.cardinality}"
        return f"{self.family}:{self.n}"

    def enumerate(self, cap: int = DEFAULT_ENUMERATION_CAP) -> ElementBatch:
        """按确定顺序列出全部群元，恒等元在首位（explicit 保持给定顺序）。"""
        if self.cardinality > cap:
            raise GroupTooLarge(f"群 {self} 含 {self.cardinality} 个元素，超过枚举上限 {cap}，请改用随机抽样")
        if self.family == EXPLICIT:
            assert self.elements is not None
            return self.elements
        return _enumerate_family(self.family, self.n)

    def sample_uniform(self, rng: np.random.Generator) -> GroupElement:
        return self.sample_rows(rng, 1)[0]

    def sample_rows(self, rng: np.random.Generator, size: int) -> ElementBatch:
        """独立均匀抽取 size 个群元，无需枚举。"""
        d = self.dimension
        if self.family == EXPLICIT:
            assert self.elements is not None
            return self.elements.take(rng.integers(0, len(self.elements), size=size))
        if self.family in (FULL_SYMMETRIC, TWO_SAMPLE):
            # Generator.permuted 对每一行做 Fisher–Yates 洗牌
            rows = rng.permuted(np.tile(np.arange(d, dtype=np.intp), (size, 1)), axis=1)
        elif self.family == SIGN_FLIP:
            rows = 1 - 2 * rng.integers(0, 2, size=(size, d))
        else:
            rows = rng.integers(0, d, size=(size, 1))
        width = 1 if self.kind == SHIFT else d
        return ElementBatch(self.kind, np.asarray(rows, dtype=np.intp).reshape(size, width), d)


def lexicographic_permutations(d: int) -> np.ndarray:
    """range(d) 的全部排列，按字典序逐行排列，与 itertools.permutations 顺序相同。"""
    rows = np.zeros((1, 0), dtype=np.intp)
    for size in range(1, d + 1):
        count = rows.shape[0]
        grown = np.empty((size * count, size), dtype=np.intp)
        for first in range(size):
            block = grown[first * count : (first + 1) * count]
            block[:, 0] = first
            # 其余位置取 range(size) 去掉 first 后的值，保持字典序
            block[:, 1:] = rows + (rows >= first)
        rows = grown
    return rows


@lru_cache(maxsize=4)
def _enumerate_family(family: str, n: int) -> ElementBatch:
    # 同一进程内重复枚举同一个群只做一次；返回的行数组只读
    spec = GroupSpec(family, n)
    d = spec.dimension
    if family in (FULL_SYMMETRIC, TWO_SAMPLE):
        rows = lexicographic_permutations(d)
    elif family == SIGN_FLIP:
        codes = np.arange(2**d, dtype=np.int64)[:, None]
        bits = (codes >> np.arange(d - 1, -1, -1)) & 1
        rows = (1 - 2 * bits).astype(np.intp)
    else:
        rows = np.arange(d, dtype=np.intp)[:, None]
    rows.setflags(write=False)
    logger.debug("枚举群 {group}，共 {count} 个元素", group=str(spec), count=rows.shape[0])
    return ElementBatch(spec.kind, rows, d)


def enumerate_group(spec: GroupSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> ElementBatch:
    return spec.enumerate(cap)


def sample_uniform(spec: GroupSpec, rng: np.random.Generator) -> GroupElement:
    return spec.sample_uniform(rng)


class RowIndex:
    """群元集合的成员查询，行被编码为整数（编码溢出时退化为字节串集合）。"""

    def __init__(self, batch: ElementBatch) -> None:
        self.kind = batch.kind
        self.dimension = batch.dimension
        action = batch.action
        width = batch.rows.shape[1]
        radix = action.code_radix(batch.dimension)
        self._powers: np.ndarray | None = None
        if radix**width < 2**62:
            self._powers = np.array([radix**i for i in range(width)], dtype=np.int64)
            self._codes = np.unique(self.encode(batch.rows))
        else:
            self._keys = {row.tobytes() for row in self._digits(batch.rows)}

    def _digits(self, rows: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(action_for(self.kind).to_digits(np.atleast_2d(rows)), dtype=np.int64)

    def encode(self, rows: np.ndarray) -> np.ndarray:
        assert self._powers is not None
        return self._digits(rows) @ self._powers

    def contains(self, rows: np.ndarray) -> np.ndarray:
        if self._powers is not None:
            codes = self.encode(rows)
            position = np.searchsorted(self._codes, codes)
            position = np.minimum(position, self._codes.size - 1)
            return self._codes[position] == codes
        return np.array([row.tobytes() in self._keys for row in self._digits(rows)], dtype=bool)


def verify_group_axioms(
    elements: Union[ElementBatch, Sequence[GroupElement]],
    *,
    exhaustive_limit: int = DEFAULT_EXHAUSTIVE_LIMIT,
    sampled_pairs: int = DEFAULT_SAMPLED_PAIRS,
    rng: np.random.Generator | None = None,
) -> AxiomReport:
    """检查恒等元、复合封闭与求逆封闭；失败作为数据返回，并附一个反例。

    集合不超过 exhaustive_limit 时逐对检查，否则随机抽查 sampled_pairs 对。
    """
    batch = ElementBatch.coerce(elements)
    action = batch.action
    index = RowIndex(batch)
    size = len(batch)

    contains_identity = bool(index.contains(batch.identity_row[None, :])[0])

    inverses = action.inverse_rows(batch.rows, batch.dimension)
    inverse_ok = index.contains(inverses)
    inverse_witness = None if inverse_ok.all() else batch.rows[int(np.argmin(inverse_ok))].tolist()

    composition_witness: list[list[int]] | None = None
    exhaustive = size <= exhaustive_limit
    if exhaustive:
        for j in range(size):
            composed = action.compose_rows(batch.rows, batch.rows[j], batch.dimension)
            ok = index.contains(composed)
            if not ok.all():
                i = int(np.argmin(ok))
                composition_witness = [batch.rows[i].tolist(), batch.rows[j].tolist()]
                break
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        left = rng.integers(0, size, size=sampled_pairs)
        right = rng.integers(0, size, size=sampled_pairs)
        composed = action.compose_rows(batch.rows[left], batch.rows[right], batch.dimension)
        ok = index.contains(composed)
        if not ok.all():
            failure = int(np.argmin(ok))
            composition_witness = [batch.rows[left[failure]].tolist(), batch.rows[right[failure]].tolist()]
        logger.debug("集合含 {size} 个元素，抽查 {pairs} 对复合", size=size, pairs=sampled_pairs)

    return AxiomReport(
        size=size,
        kind=batch.kind,
        dimension=batch.dimension,
        contains_identity=contains_identity,
        closed_under_composition=composition_witness is None,
        closed_under_inverse=inverse_witness is None,
        exhaustive=exhaustive,
        composition_witness=composition_witness,
        inverse_witness=inverse_witness,
    )


def case_placement(case_set: Iterable[int], dimension: int) -> np.ndarray:
    """把给定下标集合放到病例位置（前 n 位）的最小置换。"""
    cases = sorted(int(i) for i in case_set)
    chosen = set(cases)
    controls = [i for i in range(dimension) if i not in chosen]
    return np.array(cases + controls, dtype=np.intp)


def balanced_permutations(n: int, *, distinct_labelings: bool = False) -> ElementBatch:
    """2n 个下标上的平衡置换：恰好交换 n/2 个病例与 n/2 个对照的标签。

    这个集合不含恒等元也不是群，只用于反例演示。distinct_labelings=True 时每种平衡重标记
    只保留一个代表置换。
    """
    if n < 2 or n % 2:
        raise UnsupportedDesign(f"平衡置换要求每组样本量为不小于 2 的偶数，收到 n={n}")
    dimension = 2 * n
    half = n // 2
    rows: list[np.ndarray] = []
    for swapped_cases in itertools.combinations(range(n), half):
        for swapped_controls in itertools.combinations(range(n, dimension), half):
            case_set = (set(range(n)) - set(swapped_cases)) | set(swapped_controls)
            placement = case_placement(case_set, dimension)
            if distinct_labelings:
                rows.append(placement)
                continue
            for case_order in itertools.permutations(placement[:n]):
                for control_order in itertools.permutations(placement[n:]):
                    rows.append(np.array(case_order + control_order, dtype=np.intp))
    logger.debug("生成平衡置换 {count} 个（n={n}）", count=len(rows), n=n)
    return ElementBatch(PERMUTATION, np.array(rows, dtype=np.intp), dimension)

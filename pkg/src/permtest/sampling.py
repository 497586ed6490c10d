"""随机变换向量 G' = (id, g_2, ..., g_w) 的抽样方案。"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union

import numpy as np
from loguru import logger

from .errors import InvalidParameter, PlanInfeasible, SpecParseError
from .exact_test import ClassRepresentatives
from .groups import ElementBatch, GroupSpec

# 群阶不超过该值时，无放回抽样直接枚举后按下标抽取
DISTINCT_ENUMERATION_LIMIT = 200_000
_COLLISION_WARNING = 1_000


class SamplingMode(str, Enum):
    WITH_REPLACEMENT = "with-repl"
    WITHOUT_REPLACEMENT = "without-repl"
    CLASS_WITH_REPLACEMENT = "class-with-repl"
    CLASS_WITHOUT_REPLACEMENT = "class-without-repl"
    COSET = "coset"
    EXPLICIT = "explicit"


CLASS_MODES = (SamplingMode.CLASS_WITH_REPLACEMENT, SamplingMode.CLASS_WITHOUT_REPLACEMENT)


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """抽样方案。

    include_identity=True 时首个变换固定为恒等元；设为 False 即“朴素”抽样，只用于 p 值估计
    与演示。coset 与 explicit 方案的 w 由 elements 的长度决定。
    """

    mode: SamplingMode
    w: int = 1
    include_identity: bool = True
    elements: Optional[ElementBatch] = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", SamplingMode(self.mode))
        if self.mode in (SamplingMode.COSET, SamplingMode.EXPLICIT):
            if self.elements is None or len(self.elements) == 0:
                raise PlanInfeasible(f"{self.mode.value} 方案需要非空的变换集合")
            object.__setattr__(self, "w", len(self.elements))
        if self.w < 1:
            raise InvalidParameter(f"w 必须 ≥ 1，收到 {self.w}")

    @classmethod
    def from_scheme(
        cls,
        scheme: str,
        w: int,
        *,
        include_identity: bool = True,
        elements: Optional[ElementBatch] = None,
    ) -> "SamplingPlan":
        """命令行/配置中的方案名；``naive`` 即不含恒等元的有放回抽样。"""
        if scheme == "naive":
            return cls(SamplingMode.WITH_REPLACEMENT, w, include_identity=False)
        try:
            mode = SamplingMode(scheme)
        except ValueError as exc:
            raise SpecParseError(f"未知的抽样方案：{scheme}") from exc
        return cls(mode, w, include_identity=include_identity, elements=elements)

    def to_dict(self) -> dict[str, Any]:
        return {"mode": self.mode.value, "w": self.w, "include_identity": self.include_identity}


@dataclass(frozen=True, eq=False)
class RandomDraw:
    elements: ElementBatch
    plan: SamplingPlan
    seed: Optional[int] = None
    coset_index: Optional[int] = None

    @property
    def w(self) -> int:
        return len(self.elements)

    def has_identity(self) -> bool:
        return self.elements.contains_identity()


Source = Union[GroupSpec, ClassRepresentatives, None]


def _distinct_indices(pool_size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(pool_size, size=count, replace=False)


def _distinct_from_group(
    group: GroupSpec, count: int, rng: np.random.Generator, *, exclude_identity: bool
) -> ElementBatch:
    available = group.cardinality - (1 if exclude_identity else 0)
    if count > available:
        raise PlanInfeasible(f"无放回抽样需要 {count} 个不同元素，但群 {group} 只有 {available} 个可用")
    if count == 0:
        return ElementBatch(group.kind, np.empty((0, group.identity.row.shape[0]), dtype=np.intp), group.dimension)
    if group.cardinality <= DISTINCT_ENUMERATION_LIMIT:
        everything = group.enumerate()
        pool = np.arange(len(everything))
        if exclude_identity:
            pool = pool[~everything.identity_mask()]
        return everything.take(pool[_distinct_indices(pool.size, count, rng)])

    # 大群：逐批均匀抽取并剔除重复，w ≪ √#G 时几乎不会碰撞
    kept: list[np.ndarray] = []
    seen: set[bytes] = set()
    identity = group.identity.row.tobytes()
    collisions = 0
    while len(kept) < count:
        batch = group.sample_rows(rng, count - len(kept))
        for row in batch.rows:
            key = row.tobytes()
            if key in seen or (exclude_identity and key == identity):
                collisions += 1
                continue
            seen.add(key)
            kept.append(row)
            if len(kept) == count:
                break
    if collisions > _COLLISION_WARNING:
        logger.warning("无放回抽样发生 {n} 次重复重抽，w 相对群阶过大", n=collisions)
    return ElementBatch(group.kind, np.array(kept, dtype=np.intp), group.dimension)


def draw_transforms(
    plan: SamplingPlan,
    source: Source,
    rng: np.random.Generator,
    *,
    seed: Optional[int] = None,
) -> RandomDraw:
    """按方案抽取变换向量；include_identity 时首个元素恒为恒等元。"""
    mode = plan.mode
    lead = 1 if plan.include_identity else 0
    count = plan.w - lead

    if mode in (SamplingMode.WITH_REPLACEMENT, SamplingMode.WITHOUT_REPLACEMENT):
        if not isinstance(source, GroupSpec):
            raise PlanInfeasible(f"{mode.value} 方案需要 GroupSpec")
        if mode == SamplingMode.WITH_REPLACEMENT:
            drawn = source.sample_rows(rng, count)
        else:
            drawn = _distinct_from_group(source, count, rng, exclude_identity=plan.include_identity)
        batch = drawn.prepend_identity() if lead else drawn
        return RandomDraw(batch, plan, seed)

    if mode in CLASS_MODES:
        if not isinstance(source, ClassRepresentatives):
            raise PlanInfeasible(f"{mode.value} 方案需要等价类代表元")
        reps = source.reps
        if mode == SamplingMode.CLASS_WITH_REPLACEMENT:
            picked = rng.integers(0, source.m, size=count)
        else:
            # 无放回：从 {h_2..h_m} 中抽取互不相同的类
            if count > source.m - 1:
                raise PlanInfeasible(f"按类无放回抽样至多 {source.m - 1 + lead} 个，收到 w={plan.w}")
            picked = 1 + _distinct_indices(source.m - 1, count, rng)
        drawn = reps.take(picked)
        batch = drawn.prepend_identity() if lead else drawn
        return RandomDraw(batch, plan, seed)

    assert plan.elements is not None
    if mode == SamplingMode.COSET:
        subset = plan.elements
        h_index = int(rng.integers(0, len(subset)))
        h_inverse = subset[h_index].inverse()
        return RandomDraw(subset.compose_right(h_inverse), plan, seed, coset_index=h_index)

    return RandomDraw(plan.elements, plan, seed)


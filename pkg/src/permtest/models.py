from __future__ import annotations

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

SCHEMA = "permtest/1"


class Decision(str, Enum):
    REJECT = "reject"
    RETAIN = "retain"
    REJECT_WITH_PROBABILITY = "reject-with-probability"


class TestCounts(BaseModel):
    __test__ = False

    M_plus: int = 0
    M_zero: int = 0
    D: Optional[int] = None
    B: Optional[int] = None


class TestReport(BaseModel):
    """单次检验的结果；字段名即 JSON 输出的字段名。"""

    __test__ = False
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=SCHEMA, serialization_alias="schema")
    method: str
    decision: Decision
    rejected: bool
    alpha: float
    statistic: float
    threshold_index: int
    threshold_value: float
    counts: TestCounts
    p_value: Optional[float] = None
    randomized_p_value: Optional[float] = None
    boundary_probability: Optional[float] = None
    u: Optional[float] = None
    group_size: Optional[int] = None
    w: Optional[int] = None
    k_prime: Optional[int] = None
    plan: Optional[dict[str, Any]] = None
    seed: Optional[int] = None
    tie_tolerance: float = 0.0
    draws: Optional[list[list[int]]] = None

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class PValueReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=SCHEMA, serialization_alias="schema")
    method: str
    statistic: Optional[float] = None
    p_value: Optional[float] = None
    randomized_p_value: Optional[float] = None
    upper_bound: Optional[float] = None
    p_hat: Optional[float] = None
    p_tilde: Optional[float] = None
    u: Optional[float] = None
    b: Optional[int] = None
    w: Optional[int] = None
    m: Optional[int] = None
    group_size: Optional[int] = None
    seed: Optional[int] = None

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2, exclude_none=True)


class AxiomReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=SCHEMA, serialization_alias="schema")
    size: int
    kind: str
    dimension: int
    contains_identity: bool
    closed_under_composition: bool
    closed_under_inverse: bool
    exhaustive: bool = True
    # 失败时给出一个反例：composition_witness 为 [g, h]，g∘h 不在集合内
    composition_witness: Optional[list[list[int]]] = None
    inverse_witness: Optional[list[int]] = None

    @computed_field  # type: ignore[prop-decorator]
    @property
    def is_group(self) -> bool:
        return self.contains_identity and self.closed_under_composition and self.closed_under_inverse

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class ExceedanceRow(BaseModel):
    cutoff: float
    rate: float


class SimulationReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=SCHEMA, serialization_alias="schema")
    operation: str
    replications: int
    rejections: int
    rejection_rate: float
    standard_error: float
    exceedance: list[ExceedanceRow] = Field(default_factory=list)
    ks_distance: Optional[float] = None
    binomial_pvalue: Optional[float] = None
    control: Optional["SimulationReport"] = None
    axioms: Optional[AxiomReport] = None
    config: Optional[dict[str, Any]] = None
    # 运行耗时只写日志，不进入 JSON，保证不同并发度下报告逐字节一致
    runtime_seconds: float = Field(default=0.0, exclude=True)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)

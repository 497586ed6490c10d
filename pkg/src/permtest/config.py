from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigError

Method = Literal["full", "hoeffding", "random", "randomized", "coset", "estimate", "monte-carlo"]


class NullModelConfig(BaseModel):
    kind: str = "normal"
    size: int = Field(8, ge=1)
    success_prob: float = Field(0.5, ge=0.0, le=1.0)
    # 仅作功效演示：对前 size//2 个（病例）加上位移
    shift: float = 0.0


class ProcedureConfig(BaseModel):
    method: Method = "random"
    group: str = "two-sample:4"
    stat: str = "diff-sum:n=4"
    scheme: str = "with-repl"
    w: int = Field(20, ge=1)
    alpha: float = Field(0.05, ge=0.0, lt=1.0)
    allow_naive: bool = False
    estimate: Literal["p_hat", "p_tilde"] = "p_hat"
    coset_size: int = Field(50, ge=1)
    use_class_representatives: bool = True
    tie_tolerance: float = Field(0.0, ge=0.0)


class RuntimeConfig(BaseModel):
    workers: int = Field(1, ge=1)
    chunk_size: int = Field(2000, ge=1)
    log_level: Literal["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"] = "INFO"


class SimulationConfig(BaseModel):
    null_model: NullModelConfig = Field(default_factory=NullModelConfig)
    test: ProcedureConfig = Field(default_factory=ProcedureConfig)
    replications: int = Field(100_000, ge=1)
    master_seed: int = Field(0, ge=0)
    cutoffs: list[float] = Field(default_factory=list)
    hypotheses: int = Field(1, ge=1)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    @field_validator("cutoffs")
    @classmethod
    def sorted_probabilities(cls, value: list[float]) -> list[float]:
        for cutoff in value:
            if not 0.0 <= cutoff <= 1.0:
                raise ValueError(f"cutoff 必须位于 [0, 1]，收到 {cutoff}")
        return sorted(value)

    def echo(self) -> dict:
        # runtime 不影响结果，不写入报告
        return self.model_dump(exclude={"runtime"})


def load_config(path: str | Path) -> SimulationConfig:
    """读取 YAML 或 JSON 配置（JSON 是 YAML 的子集）。"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"无法读取配置文件 {path}：{exc}") from exc
    try:
        return SimulationConfig(**(data or {}))
    except ValidationError as exc:
        raise ConfigError(f"配置文件 {path} 校验失败：{exc}") from exc

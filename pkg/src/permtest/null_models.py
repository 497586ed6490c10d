"""零假设下的数据生成器：独立同分布的标准正态与二值数据，可注册自定义生成器。"""

from __future__ import annotations

from functools import partial
from typing import Callable

import numpy as np

from .config import NullModelConfig
from .errors import ConfigError

NullSampler = Callable[[np.random.Generator], np.ndarray]
NullModelFactory = Callable[[NullModelConfig], NullSampler]

_REGISTRY: dict[str, NullModelFactory] = {}


def register_null_model(name: str) -> Callable[[NullModelFactory], NullModelFactory]:
    def decorator(factory: NullModelFactory) -> NullModelFactory:
        _REGISTRY[name] = factory
        return factory

    return decorator


def _shifted(values: np.ndarray, shift: float) -> np.ndarray:
    if shift:
        values[: values.shape[0] // 2] += shift
    return values


def _normal(rng: np.random.Generator, size: int, shift: float) -> np.ndarray:
    return _shifted(rng.standard_normal(size), shift)


def _binary(rng: np.random.Generator, size: int, success_prob: float, shift: float) -> np.ndarray:
    return _shifted((rng.random(size) < success_prob).astype(float), shift)


@register_null_model("normal")
def normal_model(config: NullModelConfig) -> NullSampler:
    return partial(_normal, size=config.size, shift=config.shift)


@register_null_model("binary")
def binary_model(config: NullModelConfig) -> NullSampler:
    return partial(_binary, size=config.size, success_prob=config.success_prob, shift=config.shift)


def build_null_sampler(config: NullModelConfig) -> NullSampler:
    factory = _REGISTRY.get(config.kind)
    if factory is None:
        raise ConfigError(f"未注册的零模型：{config.kind}（可用：{', '.join(sorted(_REGISTRY))}）")
    return factory(config)

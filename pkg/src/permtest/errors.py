from __future__ import annotations


class PermTestError(Exception):
    """permtest 所有异常的基类。"""


class PermTestUsageError(PermTestError):
    """输入或参数不合法，命令行返回码 1。"""


class PermTestRuntimeError(PermTestError):
    """输入合法但无法执行（群过大、抽样方案不可行等），命令行返回码 2。"""


class DimensionError(PermTestUsageError):
    ...


class InvalidComposition(PermTestUsageError):
    ...


class UnsupportedDesign(PermTestUsageError):
    ...


class RefusedNaivePlan(PermTestUsageError):
    ...


class SpecParseError(PermTestUsageError):
    ...


class InvalidParameter(PermTestUsageError):
    ...


class DataFormatError(PermTestUsageError):
    ...


class ConfigError(PermTestUsageError):
    ...


class GroupTooLarge(PermTestRuntimeError):
    ...


class TooManyClasses(PermTestRuntimeError):
    ...


class PlanInfeasible(PermTestRuntimeError):
    ...

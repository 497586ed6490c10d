from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, TypeAdapter, ValidationError

from .errors import DataFormatError
from .groups import PERMUTATION, SHIFT, SIGN, ElementBatch, as_data_vector


class TransformsFile(BaseModel):
    kind: str
    elements: list[Union[list[int], int]]
    dimension: Optional[int] = None


_TRANSFORMS = TypeAdapter(Union[TransformsFile, list[list[int]]])


def load_data(path: str | Path) -> np.ndarray:
    """读取单行逗号分隔或每行一个数的 CSV。"""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"数据文件不存在：{path}")
    try:
        frame = pd.read_csv(path, header=None, encoding="utf-8-sig")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise DataFormatError(f"无法解析数据文件 {path}：{exc}") from exc
    if frame.shape[0] > 1 and frame.shape[1] > 1:
        raise DataFormatError(f"数据文件应为单行或单列，实际为 {frame.shape[0]}×{frame.shape[1]}")
    try:
        values = pd.to_numeric(pd.Series(frame.to_numpy().ravel()), errors="raise")
    except (ValueError, TypeError) as exc:
        raise DataFormatError(f"数据文件 {path} 含非数值内容") from exc
    return as_data_vector(values.to_numpy(dtype=float))


def _infer_kind(rows: list[list[int]]) -> str:
    flat = [value for row in rows for value in row]
    if flat and all(value in (-1, 1) for value in flat):
        return SIGN
    return PERMUTATION


def parse_transforms(text: str) -> ElementBatch:
    """解析变换列表 JSON。

    可以是数组的数组（含 0 视为一行记法置换，只含 ±1 视为符号掩码），也可以是
    ``{"kind": "shift", "dimension": n, "elements": [0, 2]}`` 这样的对象。
    """
    try:
        parsed = _TRANSFORMS.validate_json(text)
    except ValidationError as exc:
        raise DataFormatError(f"变换文件格式错误：{exc}") from exc

    if isinstance(parsed, list):
        if not parsed:
            raise DataFormatError("变换文件为空")
        kind, rows = _infer_kind(parsed), parsed
    else:
        kind = parsed.kind
        if kind == SHIFT:
            if parsed.dimension is None:
                raise DataFormatError("shift 变换需要给出 dimension")
            rows = [[int(v) if isinstance(v, int) else int(v[0])] for v in parsed.elements]
        else:
            rows = [v if isinstance(v, list) else [v] for v in parsed.elements]
        if not rows:
            raise DataFormatError("变换文件为空")

    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise DataFormatError("变换长度不一致")
    dimension = parsed.dimension if isinstance(parsed, TransformsFile) and parsed.dimension else len(rows[0])
    batch = ElementBatch(kind, np.array(rows, dtype=np.intp), dimension)
    for row in batch.rows:
        batch.action.validate_row(row, dimension)
    return batch


def load_transforms(path: str | Path) -> ElementBatch:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"变换文件不存在：{path}")
    return parse_transforms(path.read_text(encoding="utf-8"))


def dump_transforms(batch: ElementBatch) -> str:
    payload = TransformsFile(
        kind=batch.kind,
        elements=batch.rows.tolist(),
        dimension=batch.dimension,
    )
    return payload.model_dump_json(indent=2)

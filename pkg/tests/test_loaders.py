import numpy as np
import pytest

from permtest.errors import DataFormatError, DimensionError
from permtest.groups import PERMUTATION, SHIFT, SIGN, GroupSpec
from permtest.loaders import dump_transforms, load_data, load_transforms, parse_transforms


@pytest.mark.parametrize("body", ["2.1,0.3,-1.2,0.7\n", "2.1\n0.3\n-1.2\n0.7\n"])
def test_load_data_row_or_column(tmp_path, body):
    path = tmp_path / "x.csv"
    path.write_text(body, encoding="utf-8")
    np.testing.assert_allclose(load_data(path), [2.1, 0.3, -1.2, 0.7])


@pytest.mark.parametrize("body", ["1,2\n3,4\n", "1,abc,3\n", "1,nan,2\n", ""])
def test_load_data_rejects_bad_files(tmp_path, body):
    path = tmp_path / "bad.csv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(DataFormatError):
        load_data(path)


def test_load_data_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        load_data(tmp_path / "missing.csv")


def test_parse_transforms_infers_kind():
    perms = parse_transforms("[[0, 1, 2], [1, 0, 2]]")
    assert perms.kind == PERMUTATION
    assert perms.dimension == 3
    signs = parse_transforms("[[1, 1], [-1, 1]]")
    assert signs.kind == SIGN


def test_parse_shift_object():
    batch = parse_transforms('{"kind": "shift", "dimension": 5, "elements": [0, 2]}')
    assert batch.kind == SHIFT
    assert batch.dimension == 5
    np.testing.assert_array_equal(batch.apply(np.arange(5.0))[1], [2.0, 3.0, 4.0, 0.0, 1.0])


@pytest.mark.parametrize(
    "text",
    [
        "[]",
        "[[0, 1], [0, 1, 2]]",
        '{"kind": "shift", "elements": [1]}',
        "not json",
    ],
)
def test_parse_transforms_rejects_malformed(text):
    with pytest.raises(DataFormatError):
        parse_transforms(text)


def test_parse_transforms_rejects_non_permutation():
    with pytest.raises((DataFormatError, DimensionError)):
        parse_transforms("[[0, 0, 1]]")


def test_dumped_group_loads_back(tmp_path):
    batch = GroupSpec.parse("sign-flip:3").enumerate()
    path = tmp_path / "g.json"
    path.write_text(dump_transforms(batch), encoding="utf-8")
    loaded = load_transforms(path)
    assert loaded.kind == SIGN
    np.testing.assert_array_equal(loaded.rows, batch.rows)

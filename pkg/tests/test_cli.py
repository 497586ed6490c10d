from __future__ import annotations

import json

import pytest

from conftest import WORKED_X
from permtest.cli import EXIT_NOT_A_GROUP, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, run

ONE_THIRD = "0.3333333333333333"


@pytest.fixture
def data_file(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text(",".join(str(v) for v in WORKED_X) + "\n", encoding="utf-8")
    return path


def run_json(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_worked_instance_full_scheme(data_file, capsys):
    code, report = run_json(
        ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "full-symmetric:4",
         "--scheme", "full", "--alpha", ONE_THIRD],
        capsys,
    )
    assert code == EXIT_OK
    assert report["schema"] == "permtest/1"
    assert report["counts"]["D"] == 8
    assert report["p_value"] == pytest.approx(1 / 3)
    assert report["threshold_index"] == 16
    assert report["rejected"] is True


def test_class_scheme_requires_seed(data_file, capsys):
    argv = ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "two-sample:2",
            "--scheme", "class-without-repl", "--w", "6", "--alpha", ONE_THIRD]
    assert run(argv) == EXIT_USAGE
    code, report = run_json(argv + ["--seed", "1", "--record-draws"], capsys)
    assert code == EXIT_OK
    assert report["k_prime"] == 4
    assert report["rejected"] is True
    assert report["seed"] == 1
    assert len(report["draws"]) == 6
    assert report["draws"][0] == [0, 1, 2, 3]


def test_same_seed_same_report(data_file, capsys):
    argv = ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "full-symmetric:4",
            "--scheme", "with-repl", "--w", "50", "--alpha", "0.1", "--randomized", "on", "--seed", "9"]
    _, first = run_json(argv, capsys)
    _, second = run_json(argv, capsys)
    assert first == second
    assert first["method"] == "randomized"
    assert 0.0 <= first["u"] < 1.0


def test_hoeffding_via_randomized_full_scheme(data_file, capsys):
    code, report = run_json(
        ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "full-symmetric:4",
         "--alpha", "0.05", "--randomized", "on", "--seed", "3"],
        capsys,
    )
    assert code == EXIT_OK
    assert report["method"] == "hoeffding"
    assert report["seed"] == 3


def test_naive_scheme_needs_permission(data_file, capsys):
    argv = ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "full-symmetric:4",
            "--scheme", "naive", "--w", "25", "--alpha", "0.05", "--seed", "2"]
    assert run(argv) == EXIT_USAGE
    code, report = run_json(argv + ["--allow-naive"], capsys)
    assert code == EXIT_OK
    assert report["w"] == 25


def test_coset_scheme_from_transforms_file(tmp_path, data_file, capsys):
    transforms = tmp_path / "subset.json"
    transforms.write_text("[[1, 0, 2, 3], [2, 3, 0, 1], [0, 2, 1, 3]]", encoding="utf-8")
    code, report = run_json(
        ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--transforms-file", str(transforms),
         "--scheme", "coset", "--alpha", "0.2", "--seed", "4"],
        capsys,
    )
    assert code == EXIT_OK
    assert report["method"] == "coset"
    assert report["w"] == 3


@pytest.mark.parametrize(
    "extra",
    [
        ["--stat", "median", "--group", "full-symmetric:4", "--alpha", "0.05"],
        ["--stat", "diff-sum:n=3", "--group", "full-symmetric:4", "--alpha", "0.05"],
        ["--stat", "diff-sum:n=2", "--group", "full-symmetric:4", "--alpha", "1.5"],
        ["--stat", "diff-sum:n=2", "--group", "full-symmetric:4"],
        ["--stat", "diff-sum:n=2", "--group", "full-symmetric:4", "--scheme", "bogus", "--alpha", "0.05"],
    ],
)
def test_usage_errors(data_file, extra):
    assert run(["test", "--data", str(data_file), *extra]) == EXIT_USAGE


def test_group_too_large_is_runtime_error(tmp_path):
    path = tmp_path / "long.csv"
    path.write_text(",".join(str(i) for i in range(12)) + "\n", encoding="utf-8")
    argv = ["test", "--data", str(path), "--stat", "mean", "--group", "full-symmetric:12", "--alpha", "0.05"]
    assert run(argv) == EXIT_RUNTIME


def test_pvalue_formulas(capsys):
    code, report = run_json(["pvalue", "--formula", "without-repl", "--b", "4", "--w", "99"], capsys)
    assert code == EXIT_OK
    assert report["p_value"] == pytest.approx(0.05)
    code, report = run_json(["pvalue", "--formula", "with-repl", "--b", "0", "--w", "1", "--m", "2"], capsys)
    assert report["p_value"] == pytest.approx(0.25)
    assert run(["pvalue", "--formula", "with-repl", "--b", "0", "--w", "1"]) == EXIT_USAGE


def test_pvalue_full_and_naive(data_file, capsys):
    base = ["pvalue", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "full-symmetric:4"]
    code, report = run_json(base, capsys)
    assert code == EXIT_OK
    assert report["p_value"] == pytest.approx(1 / 3)
    assert report["group_size"] == 24
    code, report = run_json(base + ["--scheme", "naive", "--w", "99", "--seed", "5"], capsys)
    assert code == EXIT_OK
    assert report["p_tilde"] == pytest.approx((report["b"] + 1) / 100)
    code, report = run_json(base + ["--scheme", "with-repl", "--w", "40", "--seed", "5", "--randomized", "on"], capsys)
    assert report["randomized_p_value"] <= report["upper_bound"]


def test_verify_group(tmp_path, capsys):
    code, report = run_json(["verify-group", "--group", "cyclic:5"], capsys)
    assert code == EXIT_OK
    assert report["is_group"] is True
    code, report = run_json(["verify-group", "--balanced", "2"], capsys)
    assert code == EXIT_NOT_A_GROUP
    assert report["contains_identity"] is False
    path = tmp_path / "pair.json"
    path.write_text("[[0, 1, 2], [1, 0, 2]]", encoding="utf-8")
    code, report = run_json(["verify-group", "--transforms-file", str(path)], capsys)
    assert code == EXIT_OK


def test_simulate_writes_report(tmp_path):
    config = tmp_path / "sim.yaml"
    config.write_text(
        "null_model: {size: 4}\n"
        "test: {method: full, group: 'two-sample:2', stat: 'diff-sum:n=2', alpha: 0.3333333333333333}\n"
        "replications: 60\n"
        "master_seed: 1\n",
        encoding="utf-8",
    )
    out = tmp_path / "out" / "report.json"
    trace = tmp_path / "trace.csv"
    assert run(["simulate", "--config", str(config), "--out", str(out), "--trace", str(trace), "--jobs", "1"]) == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["operation"] == "type1"
    assert report["replications"] == 60
    assert "runtime_seconds" not in report
    assert trace.exists()


def test_simulate_bad_config(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("replications: -5\n", encoding="utf-8")
    assert run(["simulate", "--config", str(config)]) == EXIT_USAGE


def test_missing_subcommand():
    assert run([]) == EXIT_USAGE


def test_alpha_zero_retains(data_file, capsys):
    code, report = run_json(
        ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", "full-symmetric:4", "--alpha", "0"],
        capsys,
    )
    assert code == EXIT_OK
    assert report["rejected"] is False
    assert report["p_value"] == pytest.approx(1 / 3)


def test_identity_alone_is_a_group(tmp_path, capsys):
    path = tmp_path / "id.json"
    path.write_text("[[0, 1, 2, 3]]", encoding="utf-8")
    code, report = run_json(["verify-group", "--transforms-file", str(path)], capsys)
    assert code == EXIT_OK
    assert report["size"] == 1


@pytest.fixture
def subgroup_file(tmp_path):
    path = tmp_path / "subgroup.json"
    path.write_text("[[0, 1, 2, 3], [1, 0, 2, 3], [0, 1, 3, 2], [1, 0, 3, 2]]", encoding="utf-8")
    return path


@pytest.mark.parametrize("scheme", ["with-repl", "without-repl"])
def test_random_schemes_sample_an_explicit_group(data_file, subgroup_file, capsys, scheme):
    code, report = run_json(
        ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--transforms-file", str(subgroup_file),
         "--scheme", scheme, "--w", "4", "--alpha", "0.1", "--seed", "1"],
        capsys,
    )
    assert code == EXIT_OK
    assert report["w"] == 4
    # 组内交换不改变差和，所有变换给出同一个统计量
    assert report["counts"]["B"] == 4
    assert report["rejected"] is False


def test_full_scheme_enumerates_an_explicit_group(data_file, subgroup_file, capsys):
    code, report = run_json(
        ["pvalue", "--data", str(data_file), "--stat", "diff-sum:n=2", "--transforms-file", str(subgroup_file),
         "--scheme", "full"],
        capsys,
    )
    assert code == EXIT_OK
    assert report["p_value"] == pytest.approx(1.0)


@pytest.mark.parametrize("group", ["sign-flip:4", "cyclic:4"])
def test_class_schemes_reject_other_families(data_file, capsys, group):
    argv = ["test", "--data", str(data_file), "--stat", "diff-sum:n=2", "--group", group,
            "--scheme", "class-with-repl", "--w", "5", "--alpha", "0.1", "--seed", "1"]
    assert run(argv) == EXIT_USAGE
    assert capsys.readouterr().out == ""

import csv
import json

import pytest

from qvilat.cli import fmt, main


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_solve_preset_writes_solution(tmp_path):
    assert main(["solve", "plain-obstacle", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "solution.csv")
    assert rows[0] == ["node", "x", "u_smallest", "u_greatest", "eta", "active_obstacle_flag"]
    assert len(rows) == 32
    log = _rows(tmp_path / "run_greatest.csv")
    assert log[0][:3] == ["outer_iter", "max_update", "residual"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] is True


def test_solve_accepts_preset_file_names(tmp_path):
    assert main(["solve", "preset-plain-obstacle.json", "--out", str(tmp_path)]) == 0


def test_solve_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "step-bifunction", "--out", str(a)]) == 0
    assert main(["solve", "step-bifunction", "--out", str(b)]) == 0
    for name in ("solution.csv", "run_smallest.csv", "run_greatest.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_floats_keep_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(True) == "1" and fmt(3) == "3"


@pytest.mark.parametrize(
    "content, field",
    [
        ('{"n": 0}', "'n'"),
        ("{oops", "'<json>'"),
        ('{"n": 5, "sub": 0.5, "super": 1, "f": {"terms": [{"kind": "const", "below": -1}]}}', "'sub'"),
    ],
)
def test_bad_configs_exit_2(tmp_path, capsys, content, field):
    path = tmp_path / "cfg.json"
    path.write_text(content)
    assert main(["solve", str(path), "--out", str(tmp_path)]) == 2
    assert field in capsys.readouterr().err


def test_missing_inputs_exit_2(tmp_path):
    assert main(["solve", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2
    assert main(["solve", "no-such-preset", "--out", str(tmp_path)]) == 2
    assert main(["bogus"]) == 2


def test_verify_order_summary(tmp_path):
    assert main(["verify-order", "--seed", "7", "--scale", "0.05", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["failed"] == 0
    assert all(c["samples"] > 0 for c in summary["checks"])
    rows = _rows(tmp_path / "checks.csv")
    assert rows[0] == ["suite", "check", "samples", "failures", "passed"]


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["verify-qvip", "--seed", "3", "--scale", "0.05", "--out", str(out)]) == 0
    assert (a / "checks.csv").read_bytes() == (b / "checks.csv").read_bytes()


def test_failing_check_exits_1(tmp_path, monkeypatch):
    from qvilat import suites

    def broken(seed=0, scale=1.0):
        res = suites.CheckResult("always-fails", "verify-order")
        res.record(False, {"witness": (1, 2)})
        return [res]

    monkeypatch.setitem(suites.SUITES, "verify-order", broken)
    assert main(["verify-order", "--out", str(tmp_path)]) == 1
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["first_counterexample"]["counterexample"] == {"witness": [1, 2]}


def test_oracle_command(tmp_path):
    assert main(["oracle", "tiny-quantized", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "oracle.csv")
    assert rows[0] == ["node", "x", "oracle_min", "oracle_max", "u_smallest", "u_greatest"]
    assert main(["oracle", "plain-obstacle", "--out", str(tmp_path)]) == 2


def test_sweep_in_declared_order(tmp_path):
    spec = tmp_path / "sweep.json"
    spec.write_text(json.dumps({"base": "quasi-obstacle", "instances": [{"n": 15}, {"n": 7}]}))
    assert main(["sweep", str(spec), "--out", str(tmp_path), "--jobs", "2"]) == 0
    rows = _rows(tmp_path / "sweep.csv")
    assert [r[3] for r in rows[1:]] == ["15", "7"]
    spec.write_text(json.dumps({"base": "quasi-obstacle"}))
    assert main(["sweep", str(spec), "--out", str(tmp_path)]) == 2

import json

import pytest

from ringbalance.cli import main
from ringbalance.instances import example2
from ringbalance.io import dump_instance


@pytest.fixture
def ex2_file(tmp_path):
    path = tmp_path / "ex2.json"
    path.write_text(dump_instance(example2()))
    return str(path)


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_run_sync_with_oracle(ex2_file, capsys):
    assert main(["--leader", "0", "run", ex2_file, "--protocol", "sync", "--with-oracle"]) == 0
    report = _json(capsys)
    assert (report["cost"], report["oracle_cost"], report["ratio_exact"]) == (14, 12, "7/6")
    assert report["balanced"]


def test_run_async_matches_sync(ex2_file, capsys):
    main(["run", ex2_file, "--leader", "0", "--emit", "assignment"])
    sync = _json(capsys)
    main(["run", ex2_file, "--leader", "0", "--protocol", "async", "--delay", "unit", "--emit", "assignment"])
    assert _json(capsys) == sync


def test_run_gather_is_optimal(ex2_file, capsys):
    main(["run", ex2_file, "--variant", "gather", "--with-oracle"])
    assert _json(capsys)["ratio"] == 1.0


def test_trace_file(ex2_file, tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    main(["--trace", str(trace), "run", ex2_file])
    report = _json(capsys)
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(records) == report["messages_total"]


def test_oracle_command(ex2_file, capsys):
    assert main(["oracle", ex2_file]) == 0
    assert _json(capsys)["cost"] == 12


@pytest.mark.parametrize("family,extra", [
    ("random", ["-m", "6"]), ("i1", ["-t", "4"]), ("i2", ["-t", "4"]), ("tight", ["-q", "280"]),
])
def test_gen_families(family, extra, tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["--seed", "2", "gen", "--family", family, "-n", "4", *extra, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["n"] == 4


def test_usage_errors(ex2_file, tmp_path, capsys):
    assert main(["run", ex2_file, "--variant", "eps"]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["gen", "--family", "tight", "-n", "4", "-q", "40"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_bench_command(tmp_path, capsys):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"n": [3], "m": ["n"], "protocols": ["sync", "gather"], "reps": 2}))
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["bench", str(plan), "--format", "csv", "-o", str(out_a)]) == 0
    assert main(["bench", str(plan), "--format", "csv", "--workers", "2", "-o", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    assert main(["bench", str(plan), "--summary"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": [4], "m": [2]}))
    assert main(["bench", str(bad)]) == 2

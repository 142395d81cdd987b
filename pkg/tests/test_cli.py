import csv
import json
import logging
import subprocess
import sys
from pathlib import Path

import pytest

from crowdcap import cli, engine
from crowdcap.cli import EXIT_INVALID, EXIT_INVARIANT, EXIT_OK, main

ROOT = Path(__file__).resolve().parent.parent
SCEN = ROOT / "scenarios"


def _gen(tmp_path, name="counterexample_3a", *extra):
    assert main(["generate", name, "--out", str(tmp_path), *extra]) == EXIT_OK
    return tmp_path / f"{name}.json"


def test_generate_then_check_counterexample(tmp_path, capsys):
    path = _gen(tmp_path)
    doc = json.loads(path.read_text())
    assert doc["N"] == 1 and doc["S"] == 2
    assert doc["job_types"][0]["requirement"] == [1, 1]
    assert doc["availability_dists"][0]["dist"]["support"] == [[0, 10], [10, 0]]
    assert main(["check", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "check.json").read_text())
    assert out["verdict"] == "inside" and out["rates"] == ["4"]


def test_generate_with_params(tmp_path):
    path = _gen(tmp_path, "prop5_nd", "--param", "S=6", "--param", "alpha=1/4", "--horizon", "77")
    doc = json.loads(path.read_text())
    assert doc["S"] == 6 and doc["horizon"] == 77
    assert main(["generate", "prop5_nd", "--param", "bogus=1", "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["generate", "prop5_nd", "--param", "S", "--out", str(tmp_path)]) == EXIT_INVALID


def test_check_outside_reports_witness(tmp_path):
    path = _gen(tmp_path, "intro_two_category", "--param", "cls=FD")
    assert main(["check", "--scenario", str(path), "--rates", "1,9", "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads((tmp_path / "check.json").read_text())
    assert out["verdict"] == "outside" and out["witness"] == {"jobs": [1], "skill": 0}
    assert main(["check", "--scenario", str(path), "--rates", "1", "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["check", "--scenario", str(path), "--rates", "1,-2", "--out", str(tmp_path)]) == EXIT_INVALID


def test_run_writes_csv_and_summary(tmp_path):
    path = _gen(tmp_path)
    out = tmp_path / "run"
    assert main(["run", "--scenario", str(path), "--policy", "mwta", "--horizon", "10", "--seed", "1",
                 "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader((out / "run.csv").open()))
    assert [int(r["total_backlog"]) for r in rows] == [8 * (t + 1) for t in range(10)]
    doc = json.loads((out / "summary.json").read_text())
    assert doc["config"]["seed"] == 1 and doc["final_backlog"] == 80


def test_run_is_byte_identical(tmp_path):
    args = ["run", "--scenario", str(SCEN / "fd_single_category.json"), "--horizon", "200", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("run.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_zero_horizon_writes_header_only(tmp_path):
    path = _gen(tmp_path)
    assert main(["run", "--scenario", str(path), "--horizon", "0", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "run.csv").read_text().count("\n") == 1


def test_run_with_admission(tmp_path):
    args = ["run", "--scenario", str(SCEN / "single_skill_overload.json"), "--horizon", "500", "--out",
            str(tmp_path)]
    assert main(args + ["--admission", "nu=0.01,variant=I"]) == EXIT_OK
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert doc["config"]["admission"] == {"nu": 0.01, "variant": "I"}
    assert 0 < doc["acceptance_rate"] < 1
    assert main(args) == EXIT_OK  # falls back to the scenario's nu
    assert json.loads((tmp_path / "summary.json").read_text())["config"]["admission"]["variant"] == "I"
    assert main(args + ["--admission", "nu=0.01,variant=II"]) == EXIT_INVALID
    assert main(args + ["--admission", "nu=-1"]) == EXIT_INVALID


def test_sweep_outputs(tmp_path):
    path = _gen(tmp_path, "symmetric_pools", "--param", "N=3", "--param", "S=2")
    assert main(["sweep", "--scenario", str(path), "--factors", "0.5,1.5", "--replicas", "2",
                 "--horizon", "300", "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert [(r["factor"], r["replica"]) for r in rows] == [("0.5", "0"), ("0.5", "1"), ("1.5", "0"), ("1.5", "1")]
    doc = json.loads((tmp_path / "sweep.json").read_text())
    assert doc["config"]["replicas"] == 2 and len(doc["summary"]) == 2
    for bad in (["--factors", "a,b"], ["--factors", "-1"], ["--factors", "1", "--replicas", "0"]):
        assert main(["sweep", "--scenario", str(path), "--horizon", "5", "--out", str(tmp_path), *bad]) \
            == EXIT_INVALID


def test_compare_skips_incompatible_policies(tmp_path):
    path = SCEN / "intro_two_category_ID.json"
    assert main(["compare", "--scenario", str(path), "--horizon", "100", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "compare.json").read_text())
    assert sorted(r["policy"] for r in doc["rows"]) == ["ijltt-greedyjob", "jltt-mwta"]
    assert {s["policy"] for s in doc["skipped"]} == {"mwta", "greedy-agent", "greedy-job"}
    assert (tmp_path / "compare.csv").read_text().startswith("policy,verdict")
    assert main(["compare", "--scenario", str(path), "--policy", "mwta", "--horizon", "5",
                 "--out", str(tmp_path)]) == EXIT_INVALID


def test_missing_file_bad_schema_and_incompatible_policy(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N": 1}))
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path)]) == EXIT_INVALID
    doc = json.loads((SCEN / "counterexample_3a.json").read_text())
    doc["job_types"][0]["requirement"] = [0, 0]
    bad.write_text(json.dumps(doc))
    assert main(["check", "--scenario", str(bad), "--out", str(tmp_path)]) == EXIT_INVALID
    ok = SCEN / "intro_two_category_ID.json"
    assert main(["run", "--scenario", str(ok), "--policy", "mwta", "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["run", "--scenario", str(ok), "--horizon", "-1", "--out", str(tmp_path)]) == EXIT_INVALID


def test_invariant_breach_exits_three(tmp_path, monkeypatch):
    def breach(*args, **kwargs):
        raise engine.InvariantViolation(3, "allocation constraint violated")

    monkeypatch.setattr(cli, "run", breach)
    assert main(["run", "--scenario", str(SCEN / "counterexample_3a.json"), "--out", str(tmp_path)]) \
        == EXIT_INVARIANT


def test_log_level_from_environment(monkeypatch):
    root = logging.getLogger()
    saved = root.handlers[:], root.level
    try:
        for value, level in (("DEBUG", logging.DEBUG), ("20", logging.INFO), ("nonsense", logging.WARNING)):
            root.handlers[:] = []
            monkeypatch.setenv("CROWDCAP_LOG", value)
            cli._configure_logging()
            assert root.level == level
    finally:
        root.handlers[:], _ = saved
        root.setLevel(saved[1])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "crowdcap", "check", "--scenario",
                           str(SCEN / "counterexample_3a.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True, env={"CROWDCAP_LOG": "INFO", "PATH": ""})
    assert proc.returncode == EXIT_OK
    assert "inside" in proc.stdout


def test_argparse_rejects_unknown_policy(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "x.json", "--policy", "fastest"])
    assert exc.value.code == 2

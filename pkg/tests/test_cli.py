import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

import noncoercive
from noncoercive.cli import TIMING_KEY, main

CORPUS = Path(noncoercive.__file__).parent / "corpus"


def run(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    code = main([*map(str, args), "-o", str(out)])
    return code, json.loads(out.read_text()), out.read_bytes()


def test_report_shape_and_timing(tmp_path):
    code, rep, _ = run(tmp_path, "run", CORPUS / "arctan_norm_analyze.ncp")
    assert code == 0
    assert rep["format"] == "noncoercive-report v1" and rep["task"] == "analyze"
    assert rep["exit_code"] == 0 and TIMING_KEY in rep
    code, rep, _ = run(tmp_path, "run", CORPUS / "arctan_norm_analyze.ncp", "--no-timing")
    assert TIMING_KEY not in rep


def test_reports_are_identical_modulo_timing(tmp_path):
    reports = []
    for i in range(3):
        _, rep, _ = run(tmp_path, "run", CORPUS / "box_indicator_ep.ncp", name=f"r{i}.json")
        rep.pop(TIMING_KEY)
        reports.append(json.dumps(rep, sort_keys=True))
    assert len(set(reports)) == 1


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "run", CORPUS / "linear_in_y_ep.ncp")[0] == 3
    assert run(tmp_path, "run", CORPUS / "box_indicator_ep.ncp", "--budget", "1")[0] == 4
    code, rep, _ = run(tmp_path, "run", CORPUS / "malformed" / "unclosed_paren.ncp")
    assert code == 2 and rep["error"]["code"] == "E100"
    assert "E100 at 6:9" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ncp")]) == 2


def test_subcommand_overrides_task_kind(tmp_path):
    code, rep, _ = run(tmp_path, "analyze", CORPUS / "piecewise_arctan_1d.ncp", "--no-timing")
    assert code == 0 and rep["task"] == "analyze"
    code, rep, _ = run(tmp_path, "solve-ep", CORPUS / "piecewise_arctan_1d.ncp")
    assert code == 2 and rep["error"]["code"] == "E105"


def test_seed_and_tolerance_are_recorded(tmp_path):
    _, rep, _ = run(tmp_path, "run", CORPUS / "difference_check.ncp", "--seed", "11",
                    "--tol", "1e-6")
    assert rep["seed"] == 11 and rep["config"]["tol"] == 1e-6


def test_coordinate_tables(tmp_path):
    tables = tmp_path / "tables"
    code, rep, _ = run(tmp_path, "run", CORPUS / "box_indicator_ep.ncp", "--tables", tables)
    assert code == 0 and rep["tables"]
    for path in rep["tables"]:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x1", "x2"]
        assert all(len(r) == 2 and all(float(v) == float(v) for v in r) for r in rows[1:])


def test_stdout_and_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "noncoercive", "run",
                           str(CORPUS / "constant_positive.ncp"), "--no-timing"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["task"] == "analyze"


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    for cmd in ("analyze", "cone", "solve-ep", "minimize", "check"):
        assert cmd in out

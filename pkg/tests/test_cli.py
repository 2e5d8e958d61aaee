import csv
import json
import math
import subprocess
import sys
import textwrap

import jsonschema
import pytest

from curvdecay.cli import exit_code, main
from curvdecay.config import ConfigError, load_config
from curvdecay.report import REPORT_SCHEMA, VerificationReport, dumps_reports, emit_report, load_reports
from curvdecay.scenarios import run_scenarios

ISO = """
[[scenario]]
id = "flat-iso"
command = "isoperimetric"
profile = { kind = "zero" }
manifold = { dimension = 2, warp = "euclidean" }
params = { radii = [1.0], expect_equality = true }
"""


def write(tmp_path, text, name="c.config"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def rep(i, status="PASS"):
    return VerificationReport(f"s{i}", {"i": i}, {"margin": 0.1 * i, "lhs": 1.0 / 3}, status, {"inequality": 1e-8})


def test_json_round_trip(tmp_path):
    path = emit_report([rep(1)], "json", tmp_path)
    back = load_reports(path)
    assert back == [rep(1)]
    jsonschema.validate(json.loads(path.read_text()), REPORT_SCHEMA)


def test_csv_rows(tmp_path):
    path = emit_report([rep(1), rep(2), rep(3)], "csv", tmp_path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["scenario_id", "key", "value", "status"]
    assert [r[:2] for r in rows[1:]] == [[f"s{i}", k] for i in (1, 2, 3) for k in ("margin", "lhs")]
    assert float(rows[2][2]) == 1.0 / 3


def test_empty_reports(tmp_path):
    assert json.loads(emit_report([], "json", tmp_path).read_text()) == []
    assert emit_report([], "csv", tmp_path).read_text() == "scenario_id,key,value,status\n"


def test_seventeen_digits():
    text = dumps_reports([rep(1)])
    assert "0.33333333333333331" in text


def test_nonfinite_is_numerical_failure():
    r = VerificationReport.from_margins("x", {}, {"v": math.nan}, {}, {})
    assert r.status == "NUMERICAL_FAILURE"
    with pytest.raises(ValueError):
        dumps_reports([VerificationReport("x", {}, {"v": math.inf}, "PASS", {})])


def test_emit_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit_report([rep(1)], "json", blocker / "sub")


@pytest.mark.parametrize("statuses,code", [
    (["PASS", "PASS"], 0),
    (["PASS", "FAIL", "NUMERICAL_FAILURE"], 2),
    (["PASS", "NUMERICAL_FAILURE"], 3),
    ([], 0),
])
def test_exit_code(statuses, code):
    assert exit_code([rep(i, s) for i, s in enumerate(statuses)]) == code


def test_single_iso_scenario(tmp_path):
    reports = run_scenarios(write(tmp_path, ISO))
    assert len(reports) == 1 and reports[0].status == "PASS"
    assert abs(reports[0].computed["r=1.margin"]) < 1e-12


@pytest.mark.parametrize("text", [
    ISO + ISO,
    ISO.replace("radii", "radius"),
    ISO + "\n[tolerances]\nequalty = 1e-9\n",
    ISO.replace('"zero"', '"cubic"'),
    "seed = 1\n",
    ISO.replace('kind = "zero"', 'kind = "rational", params = [-1.0]'),
    "[[scenario]\n",
])
def test_usage_errors(tmp_path, text):
    path = write(tmp_path, text)
    with pytest.raises(ConfigError):
        run_scenarios(path)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 1
    assert not (tmp_path / "out").exists()


def test_relative_paths_resolved(tmp_path):
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "lam.txt").write_text("0 1\n1 0.5\n2 0.25\n")
    cfg = load_config(write(tmp_path, """
        [[scenario]]
        id = "t"
        command = "ode"
        profile = { kind = "tabulated", path = "data/lam.txt" }
        params = { evaluations = [{ t = 0.0, expected = 0.0 }] }
    """))
    assert cfg.scenario[0].profile.path == str((tmp_path / "data" / "lam.txt").resolve())


def test_numerical_failure_does_not_abort(tmp_path):
    # ABP on a horizon too short for the transport fails numerically; the next scenario still runs
    path = write(tmp_path, """
        [[scenario]]
        id = "short"
        command = "abp"
        profile = { kind = "zero" }
        manifold = { dimension = 2, warp = "euclidean", horizon = 5.0 }
        params = { a = 1.0, r = 10.0 }
    """ + ISO)
    reports = run_scenarios(path)
    assert [r.status for r in reports] == ["NUMERICAL_FAILURE", "PASS"]
    assert "horizon" in reports[0].message
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 3


def test_fail_exit_code(tmp_path):
    path = write(tmp_path, """
        [[scenario]]
        id = "wrong-expectation"
        command = "constants"
        params = { n = 2, theta = 1.0, B = 0.0, b1 = 0.0, r0 = 1.0, expected = 3.0 }
    """)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_workers_preserve_order_and_bytes(tmp_path):
    text = "".join(ISO.replace("flat-iso", f"iso-{i}").replace("[1.0]", f"[{i + 1}.0]") for i in range(4))
    path = write(tmp_path, text)
    main(["run", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(path), "--out", str(tmp_path / "b"), "--workers", "3"])
    a = (tmp_path / "a" / "reports.json").read_bytes()
    assert a == (tmp_path / "b" / "reports.json").read_bytes()
    assert [r["scenario_id"] for r in json.loads(a)] == [f"iso-{i}" for i in range(4)]


def test_seed_override_changes_lemma_draws(tmp_path):
    path = write(tmp_path, """
        seed = 1
        [[scenario]]
        id = "lem"
        command = "lemmas"
        params = { random_count = 1 }
    """)
    a = run_scenarios(path)[0]
    b = run_scenarios(path, seed=2)[0]
    assert a.inputs["seed"] == 1 and b.inputs["seed"] == 2
    assert a.computed != b.computed


def test_constant_command(capsys):
    assert main(["constant", "--case", "domain", "--n", "2", "--theta", "0.5", "--B", "2", "--b1", "2",
                 "--r0", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.47750737, rel=1e-7)
    assert main(["constant", "--case", "submanifold", "--n", "2", "--p", "2", "--theta", "1", "--B", "0",
                 "--b1", "0", "--r0", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2 * math.sqrt(math.pi), abs=1e-12)


@pytest.mark.parametrize("argv", [
    ["constant", "--case", "submanifold", "--n", "2", "--theta", "1", "--B", "0", "--b1", "0", "--r0", "1"],
    ["constant", "--case", "domain", "--n", "2", "--theta", "2", "--B", "0", "--b1", "0", "--r0", "1"],
    ["nonsense"],
    ["run", "--config", "x"],
])
def test_constant_usage_errors(argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_validate_command(tmp_path, capsys):
    assert main(["validate", "--config", str(write(tmp_path, ISO))]) == 0
    assert main(["validate", "--config", str(write(tmp_path, ISO + ISO, "d.config"))]) == 1
    assert main(["validate", "--config", str(tmp_path / "missing.config")]) == 1


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "curvdecay", "validate", "--config", str(write(tmp_path, ISO))],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "1 scenario" in out.stdout

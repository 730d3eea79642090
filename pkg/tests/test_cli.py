import json
import shutil
import subprocess
import sys

import pytest

from sphalg import cli
from sphalg.scalar_linalg import GF, QQ


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = cli.main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def strip_times(report):
    return [{k: v for k, v in r.items() if k != "wall_time"} for r in report["records"]]


@pytest.mark.parametrize("spec,n,F,expected", [
    ("identity", 2, QQ, [[1, 0], [0, 1]]),
    ("diag", 3, QQ, [[1, 0, 0], [0, 2, 0], [0, 0, 3]]),
    ("diag:5,7", 2, GF(5), [[0, 0], [0, 2]]),
    ("explicit:1,2;3,4", 2, QQ, [[1, 2], [3, 4]]),
    ("1/2,0;0,1", 2, QQ, [[QQ(1) / 2, 0], [0, 1]]),
])
def test_parse_g(spec, n, F, expected):
    g = cli.parse_g(spec, n, F)
    assert [[g.mat[i, j] for j in range(n)] for i in range(n)] == [[F(x) for x in r] for r in expected]


def test_parse_g_random_is_seeded():
    a = cli.parse_g("random", 3, GF(101), seed=7)
    b = cli.parse_g("random", 3, GF(101), seed=7)
    assert a.to_json() == b.to_json() and a.invertible


@pytest.mark.parametrize("spec", ["1,2;3", "diag:1", "x,y;z,w", "1,2,3;4,5,6"])
def test_parse_g_rejects(spec):
    with pytest.raises(cli.ConfigError):
        cli.parse_g(spec, 2, QQ)


def test_verify_passes_and_is_deterministic(tmp_path):
    code, rep = run(tmp_path, "verify", "derivations", "--n", "2", "--g", "diag")
    assert code == 0 and rep["passed"] and rep["schema"] == cli.SCHEMA
    for r in rep["records"]:
        assert set(r) == {"check", "anchor", "inputs", "inputs_digest", "outcome", "payload", "wall_time"}
    _, again = run(tmp_path, "verify", "--suite", "derivations", "--n", "2", "--g", "diag")
    assert strip_times(rep) == strip_times(again)


def test_verify_algebra_suite(tmp_path):
    code, rep = run(tmp_path, "verify", "algebra", "--n", "2", "--g", "companion", "--field", "F101", "--D", "4")
    assert code == 0
    assert {r["check"] for r in rep["records"]} >= {"algebra.S.koszul", "algebra.E.koszul"}


@pytest.mark.parametrize("argv", [
    ["verify", "derivations", "--g", "1,2;3"],
    ["verify", "tor", "--g", "1,1;1,1"],
    ["verify", "derivations", "--field", "F4"],
    ["verify", "derivations", "--n", "1"],
    ["verify", "nonsense"],
    ["frobnicate"],
    ["verify", "derivations", "--config", "/nonexistent.toml"],
])
def test_usage_errors_exit_2(tmp_path, argv, capsys):
    assert cli.main(argv) == 2


def test_toml_config(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('suite = "derivations"\nn = 2\ng = "identity"\nfield = "Q"\n')
    code, rep = run(tmp_path, "verify", "--config", str(cfg))
    assert code == 0 and rep["config"]["g"] == [["1", "0"], ["0", "1"]]
    assert rep["suite"] == "derivations"
    # flags override file values
    code, rep2 = run(tmp_path, "verify", "--config", str(cfg), "--g", "diag")
    assert rep2["config"]["g"] != rep["config"]["g"]


def test_failing_check_exits_1(tmp_path, monkeypatch, capsys):
    def broken(rec):
        rec.check("broken.check", "always false", lambda: (False, {}))
    monkeypatch.setitem(cli.SUITE_FUNCS, "derivations", broken)
    code, rep = run(tmp_path, "verify", "derivations")
    assert code == 1 and not rep["passed"]
    assert "broken.check" in capsys.readouterr().err


def test_fixture_check(tmp_path, capsys):
    assert cli.main(["fixture", "koszul_failure", "--check"]) == 0
    shutil.copy(cli.FIXTURE_DIR / "koszul_failure.json", tmp_path)
    data = json.loads((tmp_path / "koszul_failure.json").read_text())
    data["first_failure"] = [9, 9]
    (tmp_path / "koszul_failure.json").write_text(json.dumps(data))
    assert cli.main(["fixture", "koszul_failure", "--check", "--dir", str(tmp_path)]) == 1
    assert cli.main(["fixture", "kappa", "--check", "--dir", str(tmp_path)]) == 1
    assert cli.main(["fixture", "kappa", "--dir", str(tmp_path)]) == 0
    assert cli.main(["fixture", "kappa", "--check", "--dir", str(tmp_path)]) == 0


def test_dump_S(tmp_path):
    out = tmp_path / "S.json"
    assert cli.main(["dump", "S", "--n", "2", "--g", "identity", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert len(data["basis"]) == 8


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "sphalg", "verify", "nonsense"], capture_output=True)
    assert proc.returncode == 2

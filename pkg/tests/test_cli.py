import json
import math
import subprocess
import sys

import pytest

from halfplane import __version__
from halfplane.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def test_validate_pass(capsys):
    code, rep = run_json(capsys, "validate", "--gen", "power: alpha=0.5")
    assert code == 0 and rep["status"] == "pass"
    assert rep["type"] == "parabolic"
    assert rep["header"]["version"] == __version__
    assert rep["header"]["generator"] == "power: alpha=0.5"
    assert {r["check"] for r in rep["records"]} == {"flow_invariance", "range"}
    assert set(rep["records"][0]) == {"check", "params", "predicted", "measured", "residual", "pass"}


def test_validate_fail_lists_violations(capsys):
    code, rep = run_json(capsys, "validate", "--gen", "expr: z^2")
    assert code == 1 and rep["status"] == "fail"
    assert rep["flow_invariance_violations"]


@pytest.mark.parametrize("argv", [
    ["validate", "--gen", "expr: (z+1)/(z+2) * (z"],
    ["validate", "--gen", "power: alpha=2"],
    ["validate"],
    ["bogus"],
    ["evolve", "--gen", "affine: A=1", "--t", "x"],
    ["validate", "--gen", "affine: A=1", "--format", "csv"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 2
    assert capsys.readouterr().err


def test_parse_error_reports_offset(capsys):
    code, _, err = run(capsys, "validate", "--gen", "expr: (z+1)/(z+2) * (z")
    assert code == 2 and "offset 22" in err


def test_numerical_failure(capsys):
    code, rep = run_json(capsys, "evolve", "--gen", "affine: A=-1", "--t", "5")
    assert code == 3
    assert rep["status"] == "numerical-failure" and rep["error"] == "DomainExit"


def test_evolve_power(capsys):
    code, out, _ = run(capsys, "evolve", "--gen", "power: alpha=0.5", "--t", "1", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,re,im"
    t, re_, im = map(float, lines[-1].split(","))
    assert t == 1 and re_ == pytest.approx(2.25, rel=1e-9) and im == 0


def test_extend_matches_ray_flow(capsys):
    code, rep = run_json(capsys, "extend", "--gen", "power: alpha=0.5", "--zeta", f"exp({math.pi / 8}i)")
    assert code == 0 and rep["inside_sector"]
    assert float(rep["records"][0]["residual"]) <= 1e-6


def test_extend_outside_sector(capsys):
    code, rep = run_json(capsys, "extend", "--gen", "power: alpha=0.5", "--zeta", "10*exp(1.5i)")
    assert code == 0
    assert rep["extension"] is None and not rep["inside_sector"] and rep["flow_exit"]


def test_sector_table(capsys):
    code, rep = run_json(capsys, "sector", "--gen", "moebius: a=0, b=1", "--k", "1,4.5",
                         "--eps", str(math.asin(0.1)))
    assert code == 0
    assert float(rep["threshold_k"]) == pytest.approx(4.5, rel=1e-12)
    for row in rep["per_k"]:
        assert float(row["gamma1"]) == pytest.approx(float(row["gamma_exact"]), abs=2e-3)
    code, rep = run_json(capsys, "sector", "--gen", "power: alpha=0.5")
    assert float(rep["theta1"]) == pytest.approx(math.pi / 4, abs=5e-3)
    code, rep = run_json(capsys, "sector", "--gen", "expr: z")
    assert rep["empty"] is True


def test_koenigs(capsys):
    code, rep = run_json(capsys, "koenigs", "--gen", "moebius: a=0, b=1", "--z0", "2", "--t", "1.5")
    assert code == 0 and rep["convexity_status"] == "pass"


def test_envelope_csv(capsys):
    code, out, _ = run(capsys, "envelope", "--gen", "moebius: a=0, b=1", "--z0", "1+1i",
                       "--format", "csv", "--n", "21")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "u,B1,B2" and len(lines) == 22


@pytest.mark.parametrize("argv,check", [
    (["hardy", "--check", "norm", "--p", "4"], "norm"),
    (["hardy", "--check", "pairing", "--gen", "affine: A=1", "--a", "2", "--index", "1"], "dissipativity_pairing"),
    (["hardy", "--check", "law", "--gen", "expr: z", "--t", "1"], "norm_law"),
    (["hardy", "--check", "characterize", "--gen", "moebius: a=1, b=3", "--t", "0.7"], "characterization"),
])
def test_hardy_checks(capsys, argv, check):
    code, rep = run_json(capsys, *argv)
    assert code == 0
    assert all(r["check"] == check and r["pass"] for r in rep["records"])


def test_pairing_value(capsys):
    _, rep = run_json(capsys, "hardy", "--check", "pairing", "--gen", "affine: A=1", "--a", "2")
    measured = rep["records"][0]["measured"]
    assert float(measured["re"]) == pytest.approx(-7 / 6, abs=1e-9)


def test_contractive_expected_failure_counts_as_pass(capsys):
    code, rep = run_json(capsys, "hardy", "--check", "contractive", "--gen", "power: alpha=0.5",
                         "--zeta", "exp(1.2i)")
    assert code == 0 and rep["records"][0]["check"] == "extension"


def test_report(capsys):
    code, rep = run_json(capsys, "report", "--gen", "moebius: a=1, b=3", "--seed", "4")
    assert code == 0
    assert set(rep["sections"]) == {"validate", "sector", "koenigs", "hardy"}


def test_deterministic_output(capsys):
    argv = ["report", "--gen", "power: alpha=0.25", "--seed", "7"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]
    argv = ["evolve", "--gen", "moebius: a=0, b=1", "--t", "3", "--n", "7", "--format", "csv"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_seed_changes_report(capsys):
    a = run(capsys, "report", "--gen", "power: alpha=0.5", "--seed", "1")[1]
    b = run(capsys, "report", "--gen", "power: alpha=0.5", "--seed", "2")[1]
    assert a != b


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# evolve settings\ngen = power: alpha=0.5\nt = 2\nn = 3\nformat = csv\n")
    code, out, _ = run(capsys, "evolve", "--config", str(cfg))
    assert code == 0 and out.splitlines()[-1].startswith("2,")
    code, out, _ = run(capsys, "evolve", "--config", str(cfg), "--t", "1")
    assert out.splitlines()[-1].startswith("1,")


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "validate", "--gen", "affine: A=1", "--config", str(cfg))[0] == 2
    assert run(capsys, "validate", "--gen", "affine: A=1", "--config", str(tmp_path / "missing"))[0] == 2


def test_out_file(capsys, tmp_path):
    path = tmp_path / "v.json"
    code, out, _ = run(capsys, "validate", "--gen", "affine: A=1", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["status"] == "pass"


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "halfplane.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout

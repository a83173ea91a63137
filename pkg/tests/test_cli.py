import json
import shutil
import subprocess
import sys

import pytest

from dwarp.cli import main
from test_harness import BASE


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def flat_file(tmp_path):
    p = tmp_path / "flat.dwp"
    p.write_text(BASE)
    return p


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0
    assert "surface_of_revolution_catenoid" in out and "inequality_201" in out


def test_check_text(capsys, flat_file):
    code, out, err = run(capsys, "check", str(flat_file))
    assert code == 0 and not err
    assert out.startswith("scenario flat") and "PASS" in out


def test_check_json_is_deterministic(capsys, flat_file):
    _, a, _ = run(capsys, "check", str(flat_file), "--format", "json", "--seed", "3")
    _, b, _ = run(capsys, "check", str(flat_file), "--format", "json", "--seed", "3")
    assert a == b
    d = json.loads(a)
    assert d["seed"] == 3 and d["summary"]["fail"] == 0


def test_check_bundled_by_name(capsys):
    code, out, _ = run(capsys, "check", "polar_plane", "--points", "3", "--budget", "64", "--check", "u_field")
    assert code == 0
    assert "u_field" in out


def test_selected_checks_only(capsys, flat_file):
    _, out, _ = run(capsys, "check", str(flat_file), "--format", "json", "--check", "inequality_202")
    names = {r["name"] for r in json.loads(out)["records"]}
    # the isometry gate runs first for checks that depend on it
    assert names == {"isometry", "inequality_202"}
    _, out, _ = run(capsys, "check", str(flat_file), "--format", "json", "--check", "wedge")
    assert {r["name"] for r in json.loads(out)["records"]} == {"wedge"}


def test_failing_checks_exit_1(capsys, flat_file):
    text = BASE.replace("identity = true", 'map r = "2*r"', 1)
    flat_file.write_text(text)
    code, out, _ = run(capsys, "check", str(flat_file), "--check", "isometry")
    assert code == 1 and "FAIL" in out


@pytest.mark.parametrize("args, message", [
    (["--budget", "10"], "--budget"),
    (["--points", "0"], "--points"),
    (["--tol", "-1"], "--tol"),
    (["--check", "nope"], "unknown check"),
])
def test_argument_validation_exit_2(capsys, flat_file, args, message):
    code, _, err = run(capsys, "check", str(flat_file), *args)
    assert code == 2 and message in err and err.startswith("dwarp: ")


def test_invalid_file_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.dwp"
    bad.write_text(BASE.replace("factors = R, S", "factors = R, Q"))
    code, out, err = run(capsys, "check", str(bad))
    assert code == 2 and not out
    assert "line 13" in err and "Q" in err and "bad.dwp" in err
    code, _, err = run(capsys, "check", str(tmp_path / "absent.dwp"))
    assert code == 2 and "no such file" in err
    code, _, err = run(capsys, "check", "not_a_bundled_name")
    assert code == 2 and "available" in err


def test_console_script(flat_file):
    exe = shutil.which("dwarp")
    cmd = [exe] if exe else [sys.executable, "-m", "dwarp.cli"]
    proc = subprocess.run(cmd + ["check", str(flat_file), "--format", "json"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["scenario"] == "flat"

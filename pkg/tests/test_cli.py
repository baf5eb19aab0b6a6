from __future__ import annotations

import json
import subprocess
import sys

import pytest

from eqloc.cli import FORMAT_TAG, main


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def structured(capsys, *argv: str) -> tuple[int, dict]:
    code, out, _ = run(capsys, *argv, "--format", "structured")
    return code, json.loads(out)


def test_emult_table(capsys, data_dir):
    code, out, _ = run(capsys, "emult", "--fan", str(data_dir / "p112.fan"))
    assert code == 0
    assert "  {0,2}: (1 + e^{u1-u2})/((1 - e^{2*u1-u2})(1 - e^{-u2}))" in out
    assert "  {0,2}: (-2)/((u2)(2*u1-u2))" in out
    assert out.count("em^K(V") == 6 and "em^K(X)" in out


def test_emult_single_cone_structured(capsys, data_dir):
    code, rep = structured(capsys, "emult", "--fan", str(data_dir / "p112.fan"), "--cone", "{0,2}")
    assert code == 0
    assert rep["format"] == FORMAT_TAG and rep["status"] == "ok" and rep["command"] == "emult"
    (row,) = rep["rows"]
    assert row["em_K"] == ["0", "1", "0"]


def test_euler(capsys, data_dir):
    code, out, _ = run(capsys, "euler", "--fan", str(data_dir / "p1.fan"), "--divisor", "d2")
    assert (code, out) == (0, "1 + e^{u1} + e^{2*u1}\n")
    code, out, _ = run(capsys, "euler", "--fan", str(data_dir / "p1.fan"), "--divisor", "d2", "--oracle")
    assert code == 0 and "agree: yes" in out


def test_integrate_bad_tuple_is_math_failure(capsys, data_dir):
    args = ["integrate", "--fan", str(data_dir / "p112.fan"), "--tuple", str(data_dir / "p112_bad.tuple")]
    code, out, _ = run(capsys, *args)
    assert code == 1 and out.startswith("not integral")
    code, rep = structured(capsys, *args)
    assert code == 1 and rep["status"] == "failure"
    assert rep["denominator"] == [[2, -1]]


def test_integrate_good_tuple(capsys, data_dir):
    code, out, _ = run(capsys, "integrate", "--fan", str(data_dir / "p112.fan"), "--tuple", str(data_dir / "p112_one.tuple"))
    assert (code, out.strip()) == (0, "1")


@pytest.mark.parametrize("command", ["gkm-check", "pexp-check"])
def test_tuple_checks(capsys, data_dir, command):
    fan = str(data_dir / "p112.fan")
    assert run(capsys, command, "--fan", fan, "--tuple", str(data_dir / "p112_one.tuple"))[0] == 0
    assert run(capsys, command, "--fan", fan, "--tuple", str(data_dir / "p112_bad.tuple"))[0] == 1


def test_dual_basis(capsys, data_dir):
    code, out, _ = run(capsys, "dual-basis", "--fan", str(data_dir / "p112.fan"), "--cones", "{},{2},{0,2}")
    assert code == 0
    assert "determinant: -e^{-u1+2*u2} - e^{u2}" in out
    assert "determinant (sign normalized): e^{-u1+2*u2} + e^{u2}" in out


def test_rr_check(capsys, data_dir):
    code, out, _ = run(capsys, "rr-check", "--fan", str(data_dir / "p112.fan"), "--adams", "2")
    assert code == 0 and out.rstrip().endswith("all checks pass")
    code, rep = structured(capsys, "rr-check", "--fan", str(data_dir / "p2.fan"), "--divisor", "h")
    assert code == 0 and rep["status"] == "ok"


def test_adams_check(capsys, data_dir):
    code, _, _ = run(capsys, "adams-check", "--fan", str(data_dir / "p112.fan"))
    assert code == 0


def test_spherical(capsys, data_dir):
    code, out, _ = run(capsys, "spherical-check", "--kind", "pv", "--tuple", str(data_dir / "pv_remark.tuple"))
    assert code == 1
    assert "violated: three-term" in out
    code, _, _ = run(capsys, "spherical-check", "--kind", "pv", "--tuple", str(data_dir / "pv_basis.tuple"))
    assert code == 0
    code, out, _ = run(
        capsys, "spherical-check", "--skeleton", str(data_dir / "pv.skel"), "--tuple", str(data_dir / "pv_skel.tuple")
    )
    assert (code, out) == (0, "relations: pass\n")


def test_spherical_needs_kind_or_skeleton(capsys, data_dir):
    code, _, err = run(capsys, "spherical-check", "--tuple", str(data_dir / "pv_remark.tuple"))
    assert code == 2 and "error" in err


def test_resolve(capsys, data_dir):
    code, out, _ = run(capsys, "resolve", "--fan", str(data_dir / "p112.fan"))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# stellar steps: 1, policy min-height"
    assert "ray 0 -1" in lines and "cone 2 3" in lines


def test_input_errors_exit_two(capsys, data_dir):
    code, _, err = run(capsys, "integrate", "--fan", str(data_dir / "missing.fan"), "--tuple", "x")
    assert code == 2 and err.startswith("eqloc integrate: error:")
    code, rep = structured(capsys, "euler", "--fan", str(data_dir / "p1.fan"), "--divisor", "nope")
    assert code == 2 and rep["status"] == "error" and rep["format"] == FORMAT_TAG


def test_argparse_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as err:
        main(["emult", "--bogus"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2


def test_corpus_subset(capsys):
    code, out, _ = run(capsys, "corpus", "--criteria", "1,2")
    assert code == 0
    assert [line.split(":")[0] for line in out.splitlines()] == ["criterion 1", "criterion 2"]
    assert all("PASS" in line for line in out.splitlines())


def test_output_is_byte_deterministic(data_dir):
    cmd = [sys.executable, "-m", "eqloc.cli", "emult", "--fan", str(data_dir / "p112.fan"), "--format", "structured"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and json.loads(a)["format"] == FORMAT_TAG


def test_console_script_entry_point():
    from importlib.metadata import entry_points

    (ep,) = [e for e in entry_points(group="console_scripts") if e.name == "eqloc"]
    assert ep.value == "eqloc.cli:main"

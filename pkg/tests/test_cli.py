import csv
import io
import json
import subprocess
import sys

import pytest

from psharp.cli import build_config, build_parser, main, parse_int_list, parse_tolerances


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_int_list_and_tolerance_parsing():
    assert parse_int_list("6..9") == [6, 7, 8, 9]
    assert parse_int_list("1, 2") == [1, 2]
    assert parse_tolerances("slope=0.1,weak=1e-7") == {"slope": 0.1, "weak": 1e-7}
    assert parse_tolerances('{"slope": 0.2}') == {"slope": 0.2}


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"p": 3, "lambda": 0.5, "mu": 2, "epsilon": 0.05,
                                "tolerances": {"slope": 0.05}}))
    args = build_parser().parse_args(["classify", "--config", str(path), "--lambda", "0.4",
                                      "--mu", "inf", "--rho_list", "1,inf",
                                      "--h_exponents", "6..8", "--tolerances", "weak=1e-7"])
    ec = build_config(args)
    assert ec.lam == 0.4 and ec.mu == float("inf") and ec.rho_list == [1.0, float("inf")]
    assert ec.h_exponents == [6, 7, 8]
    assert ec.tolerances["slope"] == 0.05 and ec.tolerances["weak"] == 1e-7


def test_classify_prints_both_tables(capsys):
    code, out, _ = run(capsys, "classify")
    assert code == 0
    assert "membership of u" in out and "membership of A" in out
    assert "u in B^{1.25}_{rho,inf}" in out and "shift comparison" in out
    code, out, _ = run(capsys, "classify", "--rho", "4", "--q", "2")
    assert out.splitlines()[0] == "u: row 2: in B^{1.25}_{4,inf}, not in B^{1.25}_{4,2}"
    code, out, _ = run(capsys, "classify", "--mode", "L", "--lambda", "1")
    assert "W^1_rho" in out and "MISMATCH" not in out


def test_eval_values(capsys):
    # block 2 of theta=2 has width 1/4: plateau on [4.25, 4.5), gap from 4.75
    code, out, _ = run(capsys, "eval", "w", "4.375", "4.9", "--sigma", "0.5", "--bump-theta", "2")
    assert code == 0
    assert out.splitlines() == ["4.375 0.5", "4.9 0"]
    code, out, _ = run(capsys, "eval", "A", "0.3,0.4", "--d", "2", "--sigma", "0.5",
                       "--bump-theta", "2")
    assert code == 0 and len(out.split()) == 3


def test_eval_notes_saturated_points(capsys):
    # the default bump reaches the truncation point well before a_inf
    code, _, err = run(capsys, "eval", "w", "100")
    assert code == 0 and "truncated" in err


def test_norms_table(capsys):
    code, out, _ = run(capsys, "norms", "--sigma", "0.5", "--bump-theta", "2", "--rho_list", "1,2")
    assert code == 0
    assert "divergent" in out  # w' of sigma=0.5, theta=2 at rho=2


def test_modulus_csv(capsys, tmp_path):
    argv = ["modulus", "--sigma", "0.2", "--bump-theta", "1.5", "--rho_list", "1,inf",
            "--h_exponents", "6..7", "--workers", "1"]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["h", "rho", "value", "method"] and len(rows) == 5
    assert rows[1][:2] == ["0.015625", "1"] and rows[3][1] == "inf"
    assert len(rows[1][2].replace(".", "").lstrip("0")) >= 16
    dest = tmp_path / "m.csv"
    assert main(argv + ["--output", str(dest)]) == 0
    assert dest.read_text() == out


def test_experiment_exit_codes(capsys, tmp_path):
    argv = ["experiment", "--p", "2", "--lambda", "0.5", "--mu", "inf", "--epsilon", "0.3",
            "--rho_list", "2,inf", "--h_exponents", "6..11", "--d_list", "1", "--n_split", "32",
            "--out", str(tmp_path / "run"), "--json", str(tmp_path / "r.json")]
    code, out, _ = run(capsys, *argv)
    assert code == 0, out
    assert "verdict: PASS" in out
    assert json.loads((tmp_path / "r.json").read_text())["verdict"] == "pass"
    code, out, _ = run(capsys, "experiment", "--lambda", "0.97")
    assert code == 1 and "verdict: FAIL" in out


def test_invalid_input_exits_with_two(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"theta": 0.9}))
    code, _, err = run(capsys, "classify", "--config", str(bad))
    assert code == 2 and "theta" in err
    code, _, err = run(capsys, "norms", "--sigma", "0.5")
    assert code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "psharp", "classify", "--rho", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("u: row 3")


@pytest.mark.parametrize("cmd", ["eval", "norms", "modulus", "experiment", "classify"])
def test_every_config_key_has_a_flag(cmd):
    help_text = build_parser()._subparsers._group_actions[0].choices[cmd].format_help()
    keys = ["--p", "--lambda", "--mu", "--epsilon", "--mode", "--rho_list", "--h_exponents",
            "--d_list", "--tolerances", "--seed"]
    assert all(k in help_text for k in keys)

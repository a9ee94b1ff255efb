import csv

import numpy as np
import pytest

from spikybp import cli
from spikybp.ensemble import MeasurementMatrix, read_matrix_text, \
    write_matrix_text
from spikybp.experiments import CSV_HEADER
from spikybp.recovery import SparseVector, read_vector_text


@pytest.fixture
def identity_file(tmp_path):
    path = tmp_path / "id.txt"
    write_matrix_text(MeasurementMatrix(4, 4, np.eye(4), 1.0), path)
    return str(path)


@pytest.fixture
def dup_file(tmp_path):
    a = np.array([[1.0, 1.0, 0.3], [0.5, 0.5, -0.2]])
    path = tmp_path / "dup.txt"
    write_matrix_text(MeasurementMatrix(2, 3, a, 1.0), path)
    return str(path)


# ---------------------------------------------------------------- parsing

def test_parse_target_unit_and_literal():
    v = cli.parse_target("e3", 5)
    assert v == SparseVector(5, (2,), (1.0,))
    v = cli.parse_target("5; 0:0.25,4:-0.75", 5)
    assert v.support == (0, 4)
    with pytest.raises(ValueError):
        cli.parse_target("e9", 5)
    with pytest.raises(ValueError):
        cli.parse_target("e0", 5)
    with pytest.raises(ValueError):
        cli.parse_target("4; 0:1", 5)  # dim mismatch


def test_unknown_command_and_flags_exit_1(capsys):
    assert cli.run(["frobnicate"]) == 1
    assert cli.run(["plan", "--N", "3"]) == 1  # missing --n
    assert cli.run(["plan", "--N", "3", "--n", "100", "--bogus", "1"]) == 1
    capsys.readouterr()


def test_help_exits_0(capsys):
    assert cli.run(["--help"]) == 0
    capsys.readouterr()


# --------------------------------------------------------------- commands

def test_plan_output(capsys):
    assert cli.run(["plan", "--N", "3", "--n", "10000"]) == 0
    out = capsys.readouterr().out
    assert "delta = 0.0003295836866004329" in out
    assert "p = 8.38361309715754" in out
    assert "R = 7.534488188803754" in out
    for name in ("C1", "C2", "C3", "C4"):
        assert name in out
    assert "feasible: yes" in out


def test_plan_infeasible_reports_condition(capsys):
    assert cli.run(["plan", "--N", "100", "--n", "200"]) == 0
    out = capsys.readouterr().out
    assert "feasible: no" in out and "C1" in out


def test_plan_domain_error(capsys):
    assert cli.run(["plan", "--N", "1", "--n", "100"]) == 1
    assert "error:" in capsys.readouterr().err


def test_sample_deterministic_and_loadable(tmp_path, capsys):
    out1 = tmp_path / "m1.txt"
    out2 = tmp_path / "m2.txt"
    for out in (out1, out2):
        code = cli.run(["sample", "--N", "3", "--n", "500", "--seed", "9",
                        "--law", "gaussian", "--out", str(out)])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    mat = read_matrix_text(out1)
    assert mat.n_rows == 3 and mat.n_cols == 500
    capsys.readouterr()


def test_sample_infeasible_needs_force(tmp_path, capsys):
    args = ["sample", "--N", "3", "--n", "400", "--seed", "1",
            "--out", str(tmp_path / "m.txt")]
    assert cli.run(args) == 1
    err = capsys.readouterr().err
    assert "C1" in err
    assert cli.run(args + ["--force"]) == 0
    err = capsys.readouterr().err
    assert "C1" in err  # violated condition still echoed


def test_sample_explicit_law_needs_both_params(tmp_path, capsys):
    args = ["sample", "--N", "3", "--n", "100", "--seed", "1",
            "--delta", "0.01", "--out", str(tmp_path / "m.txt")]
    assert cli.run(args) == 1
    assert cli.run(args + ["--R", "6"]) == 0
    capsys.readouterr()


def test_moments_output(capsys):
    assert cli.run(["moments", "--law", "spiky", "--delta", "0.25",
                    "--R", "3", "--p", "4"]) == 0
    out = capsys.readouterr().out
    assert "lp_norm(p=4.0) = 2.83667736440285" in out
    assert "normalized_fourth_moment" in out
    assert cli.run(["moments", "--law", "spiky", "--p", "4"]) == 1
    capsys.readouterr()


def test_certify_exit_codes(identity_file, dup_file, tmp_path, capsys):
    assert cli.run(["certify", "--matrix", identity_file,
                    "--target", "e1"]) == 0
    assert "no certificate" in capsys.readouterr().out
    cert_path = tmp_path / "cert.txt"
    code = cli.run(["certify", "--matrix", dup_file, "--target", "e1",
                    "--out", str(cert_path)])
    assert code == 2
    out = capsys.readouterr().out
    assert "failure certificate found" in out
    text = cert_path.read_text()
    assert text.startswith("target:")
    assert "witness:" in text


def test_nsp_command(identity_file, dup_file, capsys):
    assert cli.run(["nsp", "--matrix", identity_file, "--d", "1"]) == 0
    assert capsys.readouterr().out.startswith("holds")
    assert cli.run(["nsp", "--matrix", dup_file, "--d", "1"]) == 0
    assert capsys.readouterr().out.startswith("fails")


def test_recover_command(dup_file, tmp_path, capsys):
    out = tmp_path / "x.txt"
    code = cli.run(["recover", "--matrix", dup_file, "--target", "e1",
                    "--unique", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "l1_value = 1.0" in text
    assert "unique: not_unique" in text
    assert "witness_alt:" in text
    x = read_vector_text(out)
    assert x.shape == (3,)


def test_recover_infeasible_y(tmp_path, capsys):
    z = tmp_path / "z.txt"
    m = tmp_path / "m.txt"
    write_matrix_text(MeasurementMatrix(2, 2, np.zeros((2, 2)), 1.0), m)
    z.write_text("1 1\n")
    assert cli.run(["recover", "--matrix", str(m), "--y", str(z)]) == 1
    assert "error:" in capsys.readouterr().err


def test_l0_command(dup_file, capsys):
    assert cli.run(["l0", "--matrix", dup_file, "--target", "e1",
                    "--d-max", "1"]) == 0
    out = capsys.readouterr().out
    assert "solutions: 2" in out


def test_compat_command(identity_file, capsys):
    assert cli.run(["compat", "--matrix", identity_file, "--s", "1",
                    "--L", "1"]) == 0
    out = capsys.readouterr().out
    assert "phi2 = " in out
    assert cli.run(["compat", "--matrix", identity_file, "--s", "0",
                    "--L", "1"]) == 1  # 1-based indices
    capsys.readouterr()


def test_theorem_a_stdout_covers_aggregate_row(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = cli.run(["theorem-a", "--N", "3", "--n", "5000", "--trials", "2",
                    "--seed", "7", "--out", str(out), "--threads", "1"])
    assert code == 0
    stdout = capsys.readouterr().out
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == list(CSV_HEADER)
    agg = rows[-1]
    assert agg[6] == "-1"
    # consistency grep: every populated aggregate field appears on stdout
    for field in agg:
        if field:
            assert field in stdout, field


def test_theorem_a_deterministic_csv(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.run(["theorem-a", "--N", "3", "--n", "5000",
                        "--trials", "2", "--seed", "3", "--out", str(path),
                        "--threads", "1"]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_theorem_a_override_needs_all_three(tmp_path, capsys):
    args = ["theorem-a", "--N", "3", "--n", "5000", "--trials", "1",
            "--seed", "1", "--out", str(tmp_path / "r.csv"),
            "--delta", "0.001"]
    assert cli.run(args) == 1
    capsys.readouterr()


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = cli.run(["sweep", "--N-list", "3", "--n-list", "5000,6000",
                    "--trials-list", "2", "--seed", "11",
                    "--out", str(out), "--threads", "1"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "cell 0:" in stdout and "cell 1:" in stdout
    with open(out, newline="") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 7


def test_sweep_infeasible_exit_1(tmp_path, capsys):
    code = cli.run(["sweep", "--N-list", "3", "--n-list", "400",
                    "--trials-list", "1", "--seed", "1",
                    "--out", str(tmp_path / "s.csv")])
    assert code == 1
    capsys.readouterr()

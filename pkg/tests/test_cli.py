import json
import subprocess
import sys

import pytest

from ccldgm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_rd_bound(capsys):
    assert run(capsys, "rd-bound", "--rate", "0.5") == (0, "0.1100\n", "")
    code, _, err = run(capsys, "rd-bound", "--rate", "1.5")
    assert code == 1 and "--rate" in err


def test_encode_output_is_byte_identical(capsys):
    argv = ["encode", "--l", "3", "--r", "6", "--n", "100", "--L", "1", "--beta", "2", "--seed", "7"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0 and first == second
    record = json.loads(first[1])
    assert len(record["u"]) == 50 and set(record["u"]) <= {"0", "1"}
    assert "wall_time" not in record
    assert record["beta"] == 2.0 and record["instance_seed"] == 7


def test_encode_from_files(capsys, tmp_path):
    code, edges, _ = run(capsys, "sample", "--l", "3", "--r", "6", "--n", "20", "--L", "4", "--w", "2", "--seed", "1")
    assert code == 0 and edges.splitlines()[0] == "3 6 20 4 2 1"
    (tmp_path / "g.txt").write_text(edges)
    (tmp_path / "x.txt").write_text("01" * 40 + "\n")
    code, out, _ = run(
        capsys, "encode", "--l", "3", "--r", "6", "--n", "20", "--L", "4", "--w", "2", "--seed", "2",
        "--graph", str(tmp_path / "g.txt"), "--source", str(tmp_path / "x.txt"),
        "--trace", str(tmp_path / "t.csv"), "--timing",
    )
    assert code == 0 and "wall_time" in json.loads(out)
    assert (tmp_path / "t.csv").read_text().startswith("round,t1,condition,delta,max_bias")
    (tmp_path / "short.txt").write_text("0101\n")
    code, _, err = run(capsys, "encode", "--l", "3", "--r", "6", "--n", "20", "--seed", "2",
                       "--source", str(tmp_path / "short.txt"))
    assert code == 1 and "--source" in err


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["encode", "--l", "3", "--r", "6", "--n", "100", "--L", "2", "--w", "3", "--seed", "1"], "--w"),
        (["encode", "--l", "3", "--r", "6", "--n", "100"], "--seed"),
        (["encode", "--l", "3", "--r", "6", "--n", "100", "--seed", "1", "--beta", "-1"], "--beta"),
        (["encode", "--l", "3", "--r", "6", "--n", "100", "--seed", "1", "--bogus"], "--bogus"),
        (["experiment", "--config", "missing.cfg"], "--config"),
        (["sweep-beta", "--l", "3", "--r", "6", "--n", "12", "--seed", "1"], "--beta-grid"),
        (["experiment", "--l", "3", "--r", "6", "--n", "12"], "seed"),
        (["sample", "--l", "3", "--r", "6", "--n", "7", "--seed", "1"], "--n"),
    ],
)
def test_validation_errors_exit_1(capsys, argv, flag):
    code, out, err = run(capsys, *argv)
    assert code == 1
    assert flag in err
    assert out == ""


def test_help_lists_defaults(capsys):
    code, out, _ = run(capsys, "encode", "--help")
    assert code == 0
    for text in ("--beta", "default 2.0", "default 0.01", "default 4.25", "default 10", "--seed", "--out"):
        assert text in out


def test_experiment_and_sweep(capsys, tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[ensemble]\nl = 3\nr = 6\nn = 20\nL = 8\nw = 2\n[experiment]\ninstances = 2\nseed = 3\n")
    code, out, _ = run(capsys, "experiment", "--config", str(cfg), "--report", str(tmp_path / "r.json"))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "l,r,n,L,w,beta,instances,mean_D,std_D,saturated_D"
    assert lines[1].startswith("3,6,20,8,2,2,2,")
    assert json.loads((tmp_path / "r.json").read_text())["instance_count"] == 2
    code, out, _ = run(capsys, "sweep-beta", "--config", str(cfg), "--beta-grid", "1,2", "--instances", "1")
    assert code == 0
    assert [ln.split(",")[5] for ln in out.splitlines()[1:]] == ["1", "2"]


def test_profile_and_oracle_check(capsys, tmp_path):
    code, out, _ = run(capsys, "profile", "--l", "3", "--r", "6", "--n", "20", "--L", "8", "--w", "2", "--seed", "4")
    assert code == 0
    lines = out.splitlines()
    assert "z,d_z" in lines and lines[-1].startswith("7,")
    assert any(ln.startswith("# saturated=") for ln in lines)
    code, out, _ = run(capsys, "oracle-check", "--l", "3", "--r", "6", "--n", "16", "--instances", "3", "--seed", "1")
    assert code == 0
    rows = [ln.split(",") for ln in out.splitlines()[1:]]
    assert len(rows) == 3 and all(float(r[3]) >= 0 for r in rows)
    code, _, err = run(capsys, "oracle-check", "--l", "3", "--r", "6", "--n", "100", "--seed", "1")
    assert code == 1


def test_runtime_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "g.txt"
    bad.write_text("3 6 20 1 1 -\n0 0\n0 oops\n")
    code, _, err = run(capsys, "encode", "--l", "3", "--r", "6", "--n", "20", "--seed", "1", "--graph", str(bad))
    assert code == 2 and "error" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ccldgm", "rd-bound", "--rate", "0.5"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout == "0.1100\n"

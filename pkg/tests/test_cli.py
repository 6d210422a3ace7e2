"""CLI tests driven through main(): outputs, exit codes, seed resolution."""

import io
import math

import pytest

from karycount import cli


def run_cli(argv, stdin_text=None, monkeypatch=None, capsys=None, env=None):
    """Invoke main() and return (exit_code, stdout, stderr)."""
    if stdin_text is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin_text))
    if env:
        for key, value in env.items():
            monkeypatch.setenv(key, value)
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_run_zero_noise_with_true(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["run", "--zero-noise", "--with-true", "--input", "-"],
        stdin_text="1\n1\n0\n1\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines == ["t,estimate,true", "1,1,1", "2,2,2", "3,2,2", "4,3,3"]
    assert "# zero-noise" in out and "# with-true" in out


def test_run_is_deterministic(monkeypatch, capsys):
    args = ["run", "--seed", "5", "--input", "-"]
    a = run_cli(args, stdin_text="1,0,1,1\n", monkeypatch=monkeypatch, capsys=capsys)
    b = run_cli(args, stdin_text="1,0,1,1\n", monkeypatch=monkeypatch, capsys=capsys)
    assert a == b
    assert a[0] == 0
    assert "# seed=5" in a[1]


def test_run_accepts_comma_separated_bits(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["run", "--zero-noise", "--input", "-"],
        stdin_text="1, 0, 1\n1\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    assert out.splitlines()[-1] == "4,3"


def test_run_rejects_bad_token(monkeypatch, capsys):
    code, _, err = run_cli(
        ["run", "--input", "-"],
        stdin_text="1\n2\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 2
    assert "line 2" in err


def test_run_rejects_empty_stream(monkeypatch, capsys):
    code, _, err = run_cli(
        ["run", "--input", "-"], stdin_text="", monkeypatch=monkeypatch, capsys=capsys
    )
    assert code == 2
    assert "empty" in err


def test_run_rejects_bad_parity(monkeypatch, capsys):
    code, _, err = run_cli(
        ["run", "--variant", "offset-odd", "--k", "4", "--input", "-"],
        stdin_text="1\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 1
    assert "usage error" in err


def test_unknown_flag_is_usage_error(monkeypatch, capsys):
    code, _, err = run_cli(["run", "--frobnicate"], capsys=capsys, monkeypatch=monkeypatch)
    assert code == 1
    assert "usage error" in err


def test_seed_resolution_env(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["run", "--zero-noise", "--input", "-"],
        stdin_text="1\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
        env={"DP_SEED": "77"},
    )
    assert code == 0
    assert "# seed=77" in out


def test_seed_flag_beats_env(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["run", "--zero-noise", "--seed", "3", "--input", "-"],
        stdin_text="1\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
        env={"DP_SEED": "77"},
    )
    assert code == 0
    assert "# seed=3" in out


def test_bad_env_seed(monkeypatch, capsys):
    code, _, err = run_cli(
        ["run", "--input", "-"],
        stdin_text="1\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
        env={"DP_SEED": "minus-one"},
    )
    assert code == 1
    assert "DP_SEED" in err


def test_bench_passes(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["bench", "--variant", "offset-odd", "--k", "3", "--h", "2", "--trials", "30000"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    row = out.splitlines()[-1].split(",")
    assert row[0] == "offset-odd" and row[3] == "4"
    assert float(row[-1]) == pytest.approx(12.0)


def test_bench_zero_noise(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["bench", "--k", "3", "--h", "2", "--trials", "100", "--zero-noise"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    assert float(out.splitlines()[-1].split(",")[6]) == 0.0


def test_calibrate_table(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["calibrate", "--delta1", "3", "--delta2", "1", "--epsilon", "0.5", "--delta", "1e-6"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    assert "# theorem3_branch=pure" in out
    rows = {l.split(",")[0]: l.split(",") for l in out.splitlines() if "," in l and "#" not in l}
    assert float(rows["pure-laplace"][1]) == 6.0
    assert float(rows["pure-laplace"][4]) == 72.0
    assert "gaussian" in rows and "l2-laplace" in rows


def test_calibrate_requires_delta_with_delta2(monkeypatch, capsys):
    code, _, err = run_cli(
        ["calibrate", "--delta2", "1", "--epsilon", "0.5"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 1
    assert "--delta" in err


def test_analyze_constants(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["analyze", "constants", "--variant", "offset-odd"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    assert "# argmin k=19" in out


def test_analyze_crossover(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["analyze", "crossover", "--k", "19", "--T", "1024", "--epsilon", "0.5"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    row = out.splitlines()[-1].split(",")
    assert float(row[0]) == pytest.approx(0.12359121795987113)
    assert float(row[2]) == pytest.approx(0.915695295699376)
    assert float(row[2]) < 0.92


def test_lowerbound_zero_noise(monkeypatch, capsys):
    code, out, _ = run_cli(
        ["lowerbound", "--T", "256", "--k", "4", "--trials", "32", "--zero-noise"],
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    data_rows = [l.split(",") for l in out.splitlines() if l and not l.startswith("#")][1:]
    assert len(data_rows) == 16
    assert all(float(r[1]) == 1.0 for r in data_rows)
    assert all(float(r[3]) == 0.0 for r in data_rows)


def test_lowerbound_rejects_bad_shape(monkeypatch, capsys):
    code, _, err = run_cli(
        ["lowerbound", "--T", "200", "--k", "2"], monkeypatch=monkeypatch, capsys=capsys
    )
    assert code == 1
    assert "usage error" in err


def test_output_file(tmp_path, monkeypatch, capsys):
    out_path = tmp_path / "rows.csv"
    code, _, _ = run_cli(
        ["run", "--zero-noise", "--input", "-", "--output", str(out_path)],
        stdin_text="1\n0\n",
        monkeypatch=monkeypatch,
        capsys=capsys,
    )
    assert code == 0
    text = out_path.read_text()
    assert text.splitlines()[-1] == "2,1"


def test_run_missing_input_file(monkeypatch, capsys):
    code, _, err = run_cli(
        ["run", "--input", "/nonexistent/bits.txt"], monkeypatch=monkeypatch, capsys=capsys
    )
    assert code == 2
    assert "cannot read" in err


def test_fmt_round_trips_floats():
    for x in (1.0 / 3.0, math.pi, 5.349980061976299, -0.0):
        assert float(cli.fmt(x)) == x
    assert cli.fmt(7) == "7"

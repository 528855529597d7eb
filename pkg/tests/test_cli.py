import csv
import json
import subprocess
import sys

import pytest

from fastons.cli import EXIT_DATA, EXIT_GATE, EXIT_OK, EXIT_USAGE, main, parse_config
from fastons.sources import write_pcm16, synth_ar


def run(args, capsys, environ=None):
    code = main(args, environ=environ or {})
    out, err = capsys.readouterr()
    return code, out, err


def test_run_json(capsys):
    code, out, err = run(["run", "--algo", "fast-ons", "--dim", "8", "--step-size", "1", "--cap", "500"], capsys)
    assert code == EXIT_OK, err
    d = json.loads(out)
    assert d["schema_version"] == 1 and d["steps"] == 499 and d["algorithm"] == "fast-ons"
    assert len(d["running_mse"]) == 499


def test_run_wav_input(tmp_path, capsys):
    wav = tmp_path / "speech.wav"
    write_pcm16(wav, 0.5 * synth_ar(seed=1, n=800).scaled().samples)
    out_path = tmp_path / "m.json"
    code, _, err = run(
        ["run", "--algo", "fast-ons", "--dim", "64", "--step-size", "0.003", "--alpha", "1",
         "--input", str(wav), "--output", str(out_path), "--summary"],
        capsys,
    )
    assert code == EXIT_OK, err
    d = json.loads(out_path.read_text())
    assert d["params"]["dim"] == 64 and d["steps"] == 799


def test_run_csv_output_with_named_column(tmp_path, capsys):
    data = tmp_path / "temp.csv"
    data.write_text("day,temp\n" + "\n".join(f"{i},{20 + (i % 7)}" for i in range(300)))
    code, out, err = run(
        ["run", "--algo", "ogd", "--dim", "10", "--step-size", "0.1", "--input", str(data),
         "--column", "temp", "--output-format", "csv"],
        capsys,
    )
    assert code == EXIT_OK, err
    rows = list(csv.reader(out.splitlines()))
    assert rows[0][0] == "t" and len(rows) == 300


def test_missing_input_exit_2_without_output(tmp_path, capsys):
    out_path = tmp_path / "m.json"
    code, out, err = run(["run", "--input", str(tmp_path / "nope.wav"), "--output", str(out_path)], capsys)
    assert code == EXIT_DATA
    assert not out_path.exists()
    assert list(tmp_path.iterdir()) == []
    assert len(err.strip().splitlines()) == 1


def test_bad_csv_exit_2(tmp_path, capsys):
    data = tmp_path / "x.csv"
    data.write_text("1\n2\noops\n")
    code, _, err = run(["run", "--input", str(data)], capsys)
    assert code == EXIT_DATA and "row 3" in err


def test_compare_gate(capsys):
    code, out, err = run(["compare", "--dim", "16", "--step-size", "1", "--cap", "10000"], capsys)
    assert code == EXIT_OK, err
    d = json.loads(out)
    assert d["passed"] and d["max_weight_deviation"] >= 0
    code, out, err = run(["compare", "--dim", "16", "--step-size", "1", "--cap", "2000", "--tolerance", "0"], capsys)
    assert code == EXIT_GATE
    assert json.loads(out)["passed"] is False


def test_bench_two_slopes(capsys):
    code, out, err = run(
        ["bench", "--bench-dims", "16,32,64,128", "--algos", "ons,fast-ons", "--n", "3000", "--repeats", "1"], capsys
    )
    assert code == EXIT_OK, err
    d = json.loads(out)
    assert set(d["scaling_exponent"]) == {"ons", "fast-ons"}
    assert all(v is not None for v in d["scaling_exponent"].values())
    assert len(d["relative_gain"]["regular_over_fast"]) == 4


def test_bench_single_dim_slope_absent(capsys):
    code, out, _ = run(["bench", "--bench-dims", "16", "--algos", "fast-ons", "--n", "500", "--repeats", "1"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["scaling_exponent"]["fast-ons"] is None


@pytest.mark.parametrize(
    "args",
    [
        ["bench", "--repeats", "0"],
        ["bench", "--bench-dims", "64,32"],
        ["bench", "--algos", "rls"],
        ["run", "--dim", "0"],
        ["run", "--step-size", "-1"],
        ["run", "--algo", "sgd"],
        ["run", "--input", "data.bin"],
        ["compare", "--tolerance", "-1"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(args, capsys):
    code, out, err = run(args, capsys)
    assert code == EXIT_USAGE
    assert out == ""
    assert len(err.strip().splitlines()) == 1


def test_synth_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["synth", "--seed", "42", "--n", "1000", "--output-format", "csv", "--output", str(p)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "sample" and len(lines) == 1001


def test_synth_empty(capsys):
    code, out, _ = run(["synth", "--n", "0", "--output-format", "csv"], capsys)
    assert code == EXIT_OK and out == "sample\n"


def test_synth_unstable_exit_2(tmp_path, capsys):
    out_path = tmp_path / "s.csv"
    code, _, err = run(["synth", "--coeffs", "0.9,0.8,0.7", "--n", "10", "--output", str(out_path)], capsys)
    assert code == EXIT_DATA and "unstable" in err
    assert not out_path.exists()


def test_synth_then_run_roundtrip(tmp_path, capsys):
    data = tmp_path / "s.csv"
    run(["synth", "--n", "400", "--output-format", "csv", "--output", str(data)], capsys)
    code, out, _ = run(["run", "--input", str(data), "--dim", "4", "--step-size", "1", "--summary"], capsys)
    assert code == EXIT_OK and json.loads(out)["steps"] == 399


def test_environment_overrides():
    cfg = parse_config(["run"], environ={"FONS_DIM": "32", "FONS_STEP_SIZE": "0.5", "FONS_SUMMARY": "1"})
    assert cfg.dim == 32 and cfg.step_size == 0.5 and cfg.summary
    # explicit flags win
    cfg = parse_config(["run", "--dim", "8"], environ={"FONS_DIM": "32"})
    assert cfg.dim == 8


def test_environment_invalid_value_is_usage_error(capsys):
    code, _, err = run(["run"], capsys, environ={"FONS_DIM": "many"})
    assert code == EXIT_USAGE


def test_idempotent_excluding_timing(capsys):
    args = ["run", "--dim", "8", "--cap", "300", "--step-size", "1"]
    first = json.loads(run(args, capsys)[1])
    second = json.loads(run(args, capsys)[1])
    first.pop("wall_time_ns"), second.pop("wall_time_ns")
    assert first == second


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fastons.cli", "synth", "--n", "3", "--output-format", "csv"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.count("\n") == 4

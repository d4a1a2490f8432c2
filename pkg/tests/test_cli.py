import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from wavefront import cli

GOLDEN = Path(__file__).parent / "golden"

GOLDEN_RUNS = {
    "decay": ["decay", "--r-steps", "21", "--k-steps", "21", "--t-steps", "11"],
    "beats": ["beats", "--r-steps", "41"],
    "lambda": ["lambda", "--r-steps", "41"],
}


def run(argv, tmp_path, fmt="csv"):
    out = tmp_path / "out"
    code = cli.main(argv + ["--format", fmt, "--out", str(out)])
    return code, {p.name: p.read_text() for p in sorted(out.glob("*"))} if out.exists() else {}


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    header = rows[0]
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    return header, data


def column(text, name):
    header, data = read_csv(text)
    names = [h.split(" [")[0] for h in header]
    return data[:, names.index(name)]


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden_files(name, tmp_path, update_golden):
    code, files = run(GOLDEN_RUNS[name], tmp_path)
    assert code == 0
    if update_golden:
        GOLDEN.mkdir(exist_ok=True)
        for fname, text in files.items():
            (GOLDEN / fname).write_text(text)
    expected = sorted(p.name for p in GOLDEN.glob(f"{name}_*.csv"))
    assert expected == sorted(files), "golden set out of date; rerun with --update-golden"
    for fname, text in files.items():
        golden = (GOLDEN / fname).read_text()
        gh, gd = read_csv(golden)
        h, d = read_csv(text)
        assert h == gh
        np.testing.assert_allclose(d, gd, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_repeated_runs_are_byte_identical(tmp_path, fmt):
    for argv in GOLDEN_RUNS.values():
        first = run(argv, tmp_path / "a", fmt)
        second = run(argv, tmp_path / "b", fmt)
        assert first == second


def test_decay_default_profile(tmp_path):
    code, files = run(["decay", "--r-steps", "101"], tmp_path)
    assert code == 0
    text = files["decay_profile.csv"]
    header, data = read_csv(text)
    assert len(data) == 101
    assert header[0] == "x [length]"
    x = column(text, "x")
    t1 = math.log(2)
    dens = data[:, 1]
    inside = (x > 0) & (x < t1)
    np.testing.assert_allclose(dens[inside], np.exp(x[inside] - t1), rtol=1e-13)
    # at x -> 0+ the density is gamma / (2 c)
    assert np.exp(0 - t1) == pytest.approx(0.5)
    assert set(files) == {"decay_profile.csv", "decay_spectrum.csv", "decay_survival.csv"}


def test_stdout_without_out(capsys):
    assert cli.main(["decay", "--r-steps", "5", "--t-list", "1"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("x [length]")
    assert len(out.splitlines()) == 6


def test_beats_columns(tmp_path):
    code, files = run(["beats", "--r-steps", "201"], tmp_path)
    assert code == 0
    text = files["beats_beats.csv"]
    r = column(text, "r")
    lag = r - 5.0
    env = column(text, "envelope")
    inside = (r > 0) & (r < 5.0)
    np.testing.assert_allclose(column(text, "dx")[inside], (env * np.cos(5.0 * lag) ** 2)[inside], atol=1e-12)
    np.testing.assert_allclose(column(text, "sum"), env, atol=1e-12)
    for col in ("m_plus", "m_minus"):
        dens = column(text, col)[inside]
        np.testing.assert_allclose(np.diff(np.log(dens)) / np.diff(r[inside]), 1.0, rtol=1e-9)


def test_lambda_columns(tmp_path):
    code, files = run(["lambda", "--r-steps", "2001", "--r-min", "1e-10", "--r-max", "4.9999999999"], tmp_path)
    assert code == 0
    text = files["lambda_eraser.csv"]
    r = column(text, "r")
    px, py = column(text, "px_dx"), column(text, "py_dx")
    np.testing.assert_allclose(px + py, column(text, "envelope"), atol=1e-12)
    # integrated over r the two curves hold the d_x share of the photon
    assert integrate.simpson(px + py, x=r) == pytest.approx((1 - math.exp(-5.0)) / 2, abs=1e-6)


def test_lambda_degenerate_has_no_dashed_curve(tmp_path):
    code, files = run(["lambda", "--delta-omega", "0", "--r-steps", "31"], tmp_path)
    assert code == 0
    assert not np.any(column(files["lambda_eraser.csv"], "py_dx"))


def test_measure_kinds(tmp_path):
    code, files = run(["measure", "--kind", "fabry-perot", "--steps", "600"], tmp_path)
    assert code == 0
    assert "measure_fabry_perot.csv" in files
    code, files = run(["measure", "--kind", "sigma", "--steps", "11"], tmp_path)
    assert code == 0
    text = files["measure_finite_detector.csv"]
    sig, dens = column(text, "sigma"), column(text, "density")
    np.testing.assert_allclose(dens, sig * dens[-1], rtol=1e-12, atol=1e-300)
    code, files = run(["measure", "--kind", "coincidence", "--steps", "21"], tmp_path)
    assert code == 0
    text = files["measure_coincidence.csv"]
    total = column(text, "sum")
    assert np.all(np.diff(total) > 0)  # no beats, just the rising envelope
    code, files = run(["measure", "--kind", "michelson", "--steps", "101"], tmp_path)
    assert code == 0
    assert len(column(files["measure_michelson.csv"], "delta_r")) == 100


def test_json_round_trip(tmp_path):
    code, files = run(["beats", "--r-steps", "17"], tmp_path, fmt="json")
    assert code == 0
    doc = json.loads(files["beats_beats.json"])
    assert doc["table"] == "beats"
    assert [c["name"] for c in doc["columns"]][:2] == ["r", "m_plus"]
    assert all(len(v) == 17 for v in doc["data"].values())
    table = cli.Table(doc["table"])
    for col in doc["columns"]:
        table.add(col["name"], col["unit"], doc["data"][col["name"]])
    assert table.render("json") == files["beats_beats.json"]
    _, csv_files = run(["beats", "--r-steps", "17"], tmp_path / "csv")
    assert table.render("csv") == csv_files["beats_beats.csv"]


@pytest.mark.parametrize(
    "argv",
    [
        ["decay", "--t-list", ""],
        ["decay", "--t-list", "1,foo"],
        ["decay", "--r-steps", "1"],
        ["decay", "--gamma", "-1"],
        ["beats", "--gamma-plus", "1", "--gamma-minus", "0.5"],
        ["lambda", "--gamma-plus", "0.7", "--gamma-minus", "0.3"],
        ["measure", "--kind", "fabry-perot", "--t", "0.1"],
        ["oracle", "--grid-n", "64", "--grid-span", "10", "--dt", "0.5"],
    ],
)
def test_usage_errors(argv, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)]) == cli.EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_t_list_parser():
    assert cli._floats("ln2, 2ln2, 3*pi, 0.5") == pytest.approx([math.log(2), 2 * math.log(2), 3 * math.pi, 0.5])
    with pytest.raises(cli.UsageError):
        cli._floats("__import__('os')")


def test_oracle_validation_failure(tmp_path):
    argv = ["oracle", "--grid-n", "128", "--grid-span", "5", "--dt", "0.01", "--t", "2", "--t-steps", "5"]
    code, files = run(argv, tmp_path)
    assert code == cli.EXIT_VALIDATION
    assert {"oracle_report.csv", "oracle_errors.csv"} <= set(files)


def test_oracle_small_report(tmp_path):
    argv = ["oracle", "--grid-n", "4096", "--grid-span", "20", "--dt", "0.002", "--t", "2", "--t-steps", "5"]
    code, files = run(argv, tmp_path, fmt="json")
    doc = json.loads(files["oracle_report.json"])
    assert doc["data"]["n_points"] == [819.0, 2048.0, 4096.0]
    assert code in (0, cli.EXIT_VALIDATION)
    assert doc["data"]["norm_drift"][-1] <= 1e-9


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "wavefront.cli", "decay", "--t-list", ""],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == cli.EXIT_USAGE

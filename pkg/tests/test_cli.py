from click.testing import CliRunner

from simplexcast.cli import main
from simplexcast.harness import parse_report


def run_cli(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def test_label_on_synthetic(tmp_path):
    out = tmp_path / "out"
    result = run_cli("label", "--synth", "sine", "--length", "120", "--seed", "3",
                     "--out", str(out))
    assert result.exit_code == 0
    lines = (out / "labeled_stream.csv").read_text().splitlines()
    assert lines[0].split(",")[-1] == "label"
    assert len(lines) == 1 + 120 - 10
    labels = {line.split(",")[-1] for line in lines[1:]}
    assert labels <= {"1", "2", "3"}
    assert (out / "label_log.json").exists()


def test_forecast_single_algorithm(tmp_path):
    out = tmp_path / "out"
    result = run_cli("forecast", "--algo", "maar", "--synth", "sine", "--length", "200",
                     "--seed", "1", "--ridge", "1.0", "--out", str(out))
    assert result.exit_code == 0
    rows = parse_report(out / "report.csv")
    assert [r.algorithm for r in rows] == ["maar"]
    assert rows[0].ridge == 1.0


def test_bench_writes_report_and_log(tmp_path):
    out = tmp_path / "out"
    result = run_cli("bench", "--synth", "sine", "--length", "300", "--seed", "2",
                     "--ridge", "0.1,1.0", "--out", str(out))
    assert result.exit_code == 0
    rows = parse_report(out / "report.csv")
    assert [r.algorithm for r in rows] == ["caar", "maar", "simple"]
    assert (out / "run_log.json").exists()
    assert "algorithm" in (out / "report.txt").read_text()


def test_bench_kaar_opt_in(tmp_path):
    out = tmp_path / "out"
    result = run_cli("bench", "--algos", "kaar,simple", "--kernel", "rbf", "--synth", "sine",
                     "--length", "120", "--seed", "2", "--ridge", "1.0", "--out", str(out))
    assert result.exit_code == 0
    rows = parse_report(out / "report.csv")
    assert [r.algorithm for r in rows] == ["kaar", "simple"]


def test_verify_bounds_small_run(tmp_path):
    out = tmp_path / "out"
    result = run_cli("verify-bounds", "--streams", "2", "--adversarial", "1",
                     "--max-steps", "25", "--seed", "4", "--out", str(out))
    assert result.exit_code == 0
    text = (out / "bound_reports.csv").read_text()
    assert "slack" in text.splitlines()[0]
    assert "worst slack" in result.output


def test_missing_series_is_input_error():
    result = CliRunner().invoke(main, ["forecast", "--algo", "caar"])
    assert result.exit_code == 2


def test_bad_input_file_is_input_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0\nnot-a-number\n")
    result = CliRunner().invoke(main, ["forecast", "--algo", "caar", "--input", str(bad)])
    assert result.exit_code == 2


def test_constant_series_is_input_error(tmp_path):
    const = tmp_path / "const.csv"
    const.write_text("\n".join(["5.0"] * 50) + "\n")
    result = CliRunner().invoke(main, ["forecast", "--algo", "caar", "--input", str(const)])
    assert result.exit_code == 2


def test_unknown_algos_rejected(tmp_path):
    result = CliRunner().invoke(main, ["bench", "--algos", "caar,mystery", "--synth", "sine"])
    assert result.exit_code == 2


def test_bad_ridge_rejected():
    result = CliRunner().invoke(
        main, ["forecast", "--algo", "caar", "--synth", "sine", "--ridge", "-1"])
    assert result.exit_code == 2


def test_conflicting_series_sources(tmp_path):
    f = tmp_path / "s.csv"
    f.write_text("1\n2\n3\n")
    result = CliRunner().invoke(
        main, ["label", "--input", str(f), "--synth", "sine"])
    assert result.exit_code == 2


def test_deterministic_reports_across_runs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        result = run_cli("bench", "--synth", "ar1", "--length", "250", "--seed", "9",
                         "--ridge", "1.0", "--out", str(out))
        assert result.exit_code == 0
    rows1 = parse_report(out1 / "report.csv")
    rows2 = parse_report(out2 / "report.csv")
    for a, b in zip(rows1, rows2):
        assert (a.algorithm, a.mse, a.amse, a.ridge, a.bound_slack) == \
               (b.algorithm, b.mse, b.amse, b.ridge, b.bound_slack)

import json

import pytest

import main
from errors import UsageError


def run(capsys, *argv):
    code = main.main(list(argv) + ["--quiet"])
    return code, capsys.readouterr().out


def test_parse_range():
    assert main.parse_range("2..5") == [2, 3, 4, 5]
    assert main.parse_range("2, 4,6") == [2, 4, 6]
    for bad in ("a..b", "", "5..2"):
        with pytest.raises(UsageError):
            main.parse_range(bad)


def test_coker(capsys):
    code, out = run(capsys, "coker", "--ring", "Z/8", "--matrix", "2,3;0,2")
    assert code == main.EXIT_OK
    assert out.strip() == "[2]"


def test_det_and_snf(capsys):
    assert run(capsys, "det", "--ring", "Z/8", "--matrix", "2,3;0,2") == (0, "4\n")
    code, out = run(capsys, "snf", "--ring", "Z/8", "--matrix", "2,3;0,2", "--json", "--transforms")
    payload = json.loads(out)
    assert code == 0
    assert payload["exponents"] == [0, 2]
    assert {"U", "V", "diagonal"} <= set(payload)


def test_span(capsys):
    code, out = run(capsys, "span", "--ring", "Z/4", "--matrix", "2;2")
    assert code == 0
    assert out.splitlines() == ["2,2", "size: 2"]


def test_dist_top(capsys):
    code, out = run(capsys, "dist", "--ring", "Z/2", "--u", "0", "--top", "5", "--json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert len(rows) == 5
    assert rows[0]["module_type"] == "0"
    assert rows[1]["module_type"] == "R/pi"
    assert rows[0]["probability"] == pytest.approx(0.2887880950866024, abs=1e-9)


def test_dist_csv_columns(capsys):
    code, out = run(capsys, "dist", "--ring", "Z/2", "--u", "0", "--top", "3", "--csv")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "module_type,probability,tail_bound"
    assert len(lines) == 4
    assert lines[1].startswith("0,0.28878")


def test_decompose(capsys):
    code, out = run(capsys, "decompose", "--ring", "Z/4", "--module", "[2]", "--measure", "1,0,0,0", "--json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert sorted(r["dim"] for r in rows) == [1, 1, 2]
    assert sum(r["l1_decimal"] for r in rows) == pytest.approx(3.0)


@pytest.mark.parametrize("argv", [
    ["coker", "--ring", "Z/6", "--matrix", "1"],
    ["coker", "--ring", "Z/4", "--matrix", "1,2;3"],
    ["coker", "--ring", "Z/4"],
    ["rate"],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    assert main.main(argv) == main.EXIT_USAGE


def test_help_exits_cleanly(capsys):
    assert main.main(["coker", "--help"]) == main.EXIT_OK


def test_verify_moment(capsys):
    base = ["verify", "moment", "--ring", "Z/2", "--entry", "0:3/5,1:2/5", "--module", "[1]",
            "--l", "8..12", "--ratio-bound", "0.72", "--json"]
    code, out = run(capsys, *base, "--ratio-from", "10", "--patterns", "3")
    assert code == main.EXIT_OK
    rows = json.loads(out)["rows"]
    assert rows[0]["l"] == 8
    assert rows[0]["decimal"] == pytest.approx(8 * (0.6 ** 8 - 0.55 ** 8))
    # the ratio from l = 8 to l = 9 is still above 0.72
    code, _ = run(capsys, *base, "--ratio-from", "3")
    assert code == main.EXIT_FAILED


def test_verify_swap_without_signal(capsys):
    code, out = run(capsys, "verify", "swap", "--ring", "Z/2", "--entry", "haar", "--n", "2..4", "--matrices", "3")
    assert code == main.EXIT_FAILED
    payload = json.loads(out)
    assert payload["passed"] is False
    assert all(p["mean_tv"] == 0 for p in payload["per_n"])


def test_simulate_is_reproducible(capsys, tmp_path):
    argv = ["simulate", "--ring", "Z/2", "--entry", "0:1/2,1:1/2", "--n", "2..3", "--samples", "200",
            "--seed", "7", "--resamples", "20"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *argv, "--out", str(first))[0] == 0
    assert run(capsys, *argv, "--out", str(second), "--workers", "2")[0] == 0
    a, b = json.loads(first.read_text()), json.loads(second.read_text())
    assert a["seed"] == 7
    assert a["rate_fit"] is None
    assert [p["histogram"] for p in a["per_n"]] == [p["histogram"] for p in b["per_n"]]
    assert [p["tv_vs_haar"] for p in a["per_n"]] == [p["tv_vs_haar"] for p in b["per_n"]]


def test_rate_from_series(capsys, tmp_path):
    plot = tmp_path / "rate.dat"
    code, out = run(capsys, "rate", "--tv", "2:0.49,3:0.343,4:0.2401,5:0.16807", "--emit-plot", str(plot))
    assert code == 0
    assert json.loads(out)["rate_fit"]["theta_hat"] == pytest.approx(0.7)
    lines = plot.read_text().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 5



def test_rate_reports_bound_comparison(capsys):
    series = "2:0.49,3:0.343,4:0.2401,5:0.16807"
    code, out = run(capsys, "rate", "--tv", series, "--theta-bound", "0.6", "--slack", "1.1", "--json")
    fit = json.loads(out)["rate_fit"]
    assert code == 0
    assert fit["within_bound"] is False
    assert fit["slack"] == 1.1
    code, out = run(capsys, "rate", "--tv", series, "--theta-bound", "0.6", "--slack", "1.25", "--json")
    assert json.loads(out)["rate_fit"]["within_bound"] is True


def test_config_file_fills_flags(capsys, tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({"ring": "Z/8"}))
    code, out = run(capsys, "coker", "--config", str(path), "--matrix", "2,3;0,2")
    assert (code, out.strip()) == (0, "[2]")
    path.write_text(json.dumps({"ring": "Z/8", "colour": "red"}))
    assert main.main(["coker", "--config", str(path), "--matrix", "1"]) == main.EXIT_USAGE

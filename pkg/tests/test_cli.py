import json

import pytest

from derham_range import __version__, cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cdf_csv_level2(capsys):
    code, out, _ = run(capsys, "cdf", "--u", "1", "--level", "2", "--format", "csv", "--no-timestamp")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    assert "seed=0" in lines[0] and f"version={__version__}" in lines[0]
    assert lines[1] == "x,cdf"
    rows = [line.split(",") for line in lines[2:]]
    assert [r[0] for r in rows] == ["0", "0.25", "0.5", "0.75", "1"]
    values = [float(r[1]) for r in rows]
    assert values == pytest.approx([0, 0.4, 2 / 3, 6 / 7, 1], abs=1e-16)
    assert float(rows[2][1]) == 0.6666666666666666


def test_cdf_json_and_point(capsys):
    code, out, _ = run(capsys, "cdf", "--u", "1", "--level", "1", "--format", "json")
    body = json.loads(out)
    assert code == 0
    assert [r["x"] for r in body["rows"]] == ["0", "0.5", "1"]
    assert "timestamp" in body["meta"]
    code, out, _ = run(capsys, "cdf", "--u", "1", "--x", "1/2^2", "--format", "json")
    body = json.loads(out)
    assert body["lower"] == body["upper"] == pytest.approx(0.4)
    assert body["within_tol"]


def test_cdf_u0(capsys):
    code, out, _ = run(capsys, "cdf", "--u", "0", "--level", "2", "--no-timestamp")
    assert code == 0
    assert [line.split(",")[1] for line in out.splitlines()[2:]] == ["0", "1", "1", "1", "1"]


def test_analyze_u0(capsys):
    code, out, _ = run(capsys, "analyze", "--u", "0")
    body = json.loads(out)
    assert code == 0
    assert body["classification"] == "delta-at-0"
    assert body["atoms"]["applicable"] is False
    assert body["dim_bounds"]["applicable"] is False


def test_analyze_u2(capsys):
    code, out, _ = run(capsys, "analyze", "--u", "2")
    body = json.loads(out)
    assert body["classification"] == "singular-with-atoms"
    assert len(body["criterion_residuals"]) == 2
    assert body["atoms"]["mass_at_1"] == pytest.approx(0.1569296691827464)


def test_atoms(capsys):
    code, out, _ = run(capsys, "atoms", "--u", "2", "--x", "1/2^1")
    body = json.loads(out)
    assert code == 0
    assert set(body) >= {"x", "m", "mass", "finite_n_check"}
    assert body["m"] == 1 and body["mass"] > 0


def test_simulate_byte_identical(capsys):
    argv = ("simulate", "--u", "1", "--level", "6", "--samples", "2000", "--seed", "9", "--workers", "2",
            "--no-timestamp")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    body = json.loads(a)
    assert body["seed"] == 9 and body["workers"] == 2 and body["samples"] == 2000
    assert body["meta"]["seed"] == 9
    assert sum(body["counts"].values()) == 2000
    assert all(k.isdigit() for k in body["counts"])


def test_compare_passes(capsys):
    code, out, _ = run(capsys, "compare", "--u", "1", "--level", "10", "--samples", "100000",
                       "--grid-level", "6", "--seed", "42")
    body = json.loads(out)
    assert code == 0
    assert body["pass"] is True
    assert body["ks"] <= body["dkw99"]
    assert body["meta"]["samples"] == 100000


def test_compare_gate_failure(capsys, monkeypatch):
    monkeypatch.setattr(cli, "ks_against_exact", lambda *a: 1.0)
    code, out, _ = run(capsys, "compare", "--u", "1", "--level", "3", "--samples", "100", "--grid-level", "2")
    assert code == 3
    assert json.loads(out)["pass"] is False


def test_out_file(tmp_path, capsys):
    target = tmp_path / "t.csv"
    code, out, _ = run(capsys, "cdf", "--u", "0.5", "--level", "3", "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().splitlines()[1] == "x,cdf"


@pytest.mark.parametrize(
    "argv",
    [
        ("cdf", "--u", "-1"),
        ("cdf", "--level", "31"),
        ("simulate", "--u", "0"),
        ("simulate", "--level", "21"),
        ("simulate", "--samples", "0"),
        ("compare", "--level", "4", "--grid-level", "5"),
        ("atoms", "--u", "2"),
        ("atoms", "--u", "2", "--x", "2/2^2"),
        ("cdf", "--x", "abc"),
        ("bogus",),
        ("cdf", "--workers", "0"),
        ("cdf", "--level", "ten"),
    ],
)
def test_invalid_input(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err.startswith("error: ") and err.count("\n") == 1


def test_budget_env(capsys, monkeypatch):
    monkeypatch.setenv("DERHAM_RANGE_BUDGET", "10")
    code, _, err = run(capsys, "simulate", "--level", "5", "--samples", "100")
    assert code == 2
    assert "budget" in err


def test_selftest_reports_failure(capsys, monkeypatch):
    from derham_range import acceptance

    monkeypatch.setattr(acceptance, "CRITERIA", {"ok": lambda: [acceptance.Check("a", True, "")],
                                                "bad": lambda: [acceptance.Check("b", False, "x")]})
    code, out, _ = run(capsys, "selftest")
    assert code == 3
    assert "PASS" in out and "FAIL" in out

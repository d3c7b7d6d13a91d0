import csv
import io
import json
import math

import pytest

from phaseplane import catalog
from phaseplane.cli import main, parse_range


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def trailer(text):
    line = next(ln for ln in text.splitlines() if ln.startswith("# "))
    return json.loads(line[2:])


def row_at(rows, x):
    return min(rows, key=lambda r: abs(float(r["x"]) - x))


# range syntax ----------------------------------------------------------------------

def test_parse_range():
    assert parse_range("0.5:2:4") == [0.5, 1.0, 1.5, 2.0]
    assert parse_range("1:1:1") == [1.0]


@pytest.mark.parametrize("text", ["1:2", "a:b:3", "1:2:0", "1:2:1"])
def test_bad_range(capsys, text):
    code, _, err = run(capsys, "closure", "--catalog", "harmonic", "--amplitudes", text)
    assert code == 2 and "range" in err


# reduce ----------------------------------------------------------------------------

def test_reduce_harmonic(capsys):
    code, out, _ = run(capsys, "reduce", "--system", "-x", "--amplitude", "1")
    assert code == 0
    assert out.splitlines()[0] == "x,u_lower,u_upper,phi_lower,phi_upper"
    rows = read_csv(out)
    assert len(rows) == 1001
    mid = row_at(rows, 0.0)
    assert float(mid["x"]) == pytest.approx(0.0, abs=1e-12)
    assert float(mid["phi_upper"]) == pytest.approx(1.0, abs=1e-8)
    assert float(mid["phi_lower"]) == pytest.approx(-1.0, abs=1e-8)


def test_reduce_mickens(capsys):
    code, out, _ = run(capsys, "reduce", "--catalog", "mickens", "--amplitude", "1")
    assert code == 0
    mid = row_at(read_csv(out), 0.0)
    assert float(mid["phi_upper"]) == pytest.approx(math.sqrt(math.e - 1), abs=1e-8)


def test_reduce_no_oscillation(capsys):
    code, out, err = run(capsys, "reduce", "--system", "x", "--amplitude", "1")
    assert code == 3 and out == "" and "no oscillation" in err


def test_reduce_parse_error(capsys):
    code, _, err = run(capsys, "reduce", "--system", "x++", "--amplitude", "1")
    assert code == 2 and "offset 2" in err


def test_reduce_json_uses_null_outside_a_branch(capsys):
    # the damped orbit's upper branch stops short of A
    code, out, _ = run(capsys, "reduce", "--catalog", "damped-linear", "--amplitude", "1",
                       "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows[-1]["x"] == 1.0 and rows[-1]["u_upper"] is None
    assert rows[0]["u_lower"] == 0.0


def test_reduce_to_file(capsys, tmp_path):
    path = tmp_path / "phi.csv"
    code, out, _ = run(capsys, "reduce", "--catalog", "harmonic", "--amplitude", "2",
                       "--out", str(path))
    assert code == 0 and out == ""
    assert len(read_csv(path.read_text())) == 1001


# period ----------------------------------------------------------------------------

def test_period_harmonic(capsys):
    code, out, _ = run(capsys, "period", "--catalog", "harmonic", "--amplitude", "1")
    res = json.loads(out)
    assert code == 0
    assert set(res) == {"T", "omega", "err", "method"}
    assert res["T"] == pytest.approx(2 * math.pi, abs=1e-8)
    assert res["omega"] == pytest.approx(2 * math.pi / res["T"], rel=1e-15)
    assert res["method"] == "two-branch-quadrature"


@pytest.mark.parametrize("name", ["mickens", "duffing"])
def test_period_against_oracle(capsys, name):
    code, out, _ = run(capsys, "period", "--catalog", name, "--amplitude", "1",
                       "--compare-oracle")
    res = json.loads(out)
    assert code == 0
    assert set(res) == {"T", "omega", "err", "method", "oracle_T", "rel_diff"}
    assert res["rel_diff"] <= 1e-6


def test_period_symmetric_method(capsys):
    code, out, _ = run(capsys, "period", "--catalog", "mickens", "--amplitude", "1",
                       "--method", "symmetric")
    assert code == 0 and json.loads(out)["method"] == "symmetric-quadrature"


def test_period_mismatch_exit_code(capsys):
    code, out, err = run(capsys, "period", "--catalog", "mickens", "--amplitude", "1",
                         "--compare-oracle", "--max-rel-diff", "1e-30")
    assert code == 5 and json.loads(out)["rel_diff"] > 1e-30 and "max-rel-diff" in err


def test_period_not_closed(capsys):
    code, _, err = run(capsys, "period", "--catalog", "damped-linear", "--amplitude", "1")
    assert code == 4 and "not-closed" in err


def test_catalog_parameters(capsys):
    code, out, _ = run(capsys, "period", "--catalog", "duffing", "--alpha", "2", "--beta=0",
                       "--amplitude", "1")
    assert code == 0
    assert json.loads(out)["T"] == pytest.approx(2 * math.pi / math.sqrt(2), abs=1e-8)


@pytest.mark.parametrize("argv", [
    ("--catalog", "pendulum"), ("--catalog", "mickens", "--s", "1.5"),
    ("--catalog", "harmonic", "--k", "1"), ("--catalog", "vanderpol", "--mu"),
    ("--system", "-x", "--mu", "1"),
])
def test_bad_system_arguments(capsys, argv):
    code, _, _ = run(capsys, "period", *argv, "--amplitude", "1")
    assert code == 2


def test_report_file(capsys, tmp_path):
    path = tmp_path / "run.json"
    code, out, _ = run(capsys, "period", "--catalog", "harmonic", "--amplitude", "1",
                       "--report", str(path))
    rep = json.loads(path.read_text())
    assert code == 0
    assert rep["command"][:2] == ["phaseplane", "period"]
    assert rep["system"]["catalog"] == "harmonic"
    assert rep["results"] == json.loads(out)
    assert rep["tolerances"] == {"tol": 1e-10} and rep["wall_time_s"] >= 0


def test_rerun_is_reproducible(capsys):
    argv = ("period", "--catalog", "vanderpol", "--amplitude", "2.0086198608747843")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


# closure ---------------------------------------------------------------------------

def test_closure_harmonic(capsys):
    code, out, _ = run(capsys, "closure", "--catalog", "harmonic", "--amplitudes", "0.5:2:4")
    assert code == 0
    assert out.splitlines()[0] == "A,x_L,x_R,defect,verdict"
    rows = read_csv(out)
    assert [float(r["A"]) for r in rows] == [0.5, 1.0, 1.5, 2.0]
    assert all(r["verdict"] == "closed" and abs(float(r["defect"])) <= 1e-8 for r in rows)


def test_closure_damped(capsys):
    code, out, _ = run(capsys, "closure", "--catalog", "damped-linear", "--amplitudes",
                       "1:1:1")
    assert code == 0
    assert [r["verdict"] for r in read_csv(out)] == ["not-closed"]


def test_closure_reports_no_oscillation_per_row(capsys):
    code, out, _ = run(capsys, "closure", "--system", "x", "--amplitudes", "1:2:2")
    assert code == 0
    assert [r["verdict"] for r in read_csv(out)] == ["no-oscillation"] * 2


def test_closure_finds_van_der_pol_cycle(capsys):
    code, out, _ = run(capsys, "closure", "--catalog", "vanderpol", "--mu", "1",
                       "--amplitudes", "1:3:21", "--find-root")
    assert code == 0
    summary = trailer(out)
    A_ref = catalog.VANDERPOL_ORACLE[1.0][0]
    assert abs(summary["A_star"] - A_ref) <= 1e-4
    assert summary["oracle_A"] == A_ref and summary["abs_diff"] <= 1e-4
    rows = read_csv(out)
    assert len(rows) == 21


def test_closure_json(capsys):
    code, out, _ = run(capsys, "closure", "--catalog", "harmonic", "--amplitudes", "1:2:2",
                       "--format", "json")
    doc = json.loads(out)
    assert code == 0 and set(doc["rows"][0]) == {"A", "x_L", "x_R", "defect", "verdict"}


# sweep -----------------------------------------------------------------------------

def test_sweep_harmonic(capsys):
    code, out, _ = run(capsys, "sweep", "--catalog", "harmonic", "--amplitudes", "0.1:10:5")
    assert code == 0
    assert out.splitlines()[0] == "A,T,omega,err"
    for r in read_csv(out):
        assert float(r["T"]) == pytest.approx(2 * math.pi, abs=1e-8)


def test_sweep_matches_period_exactly(capsys):
    code, out, _ = run(capsys, "sweep", "--catalog", "mickens", "--amplitudes", "0.5:2:4")
    assert code == 0
    for r in read_csv(out):
        _, single, _ = run(capsys, "period", "--catalog", "mickens", "--amplitude", r["A"])
        assert float(r["T"]) == json.loads(single)["T"]


def test_sweep_against_oracle(capsys):
    code, out, _ = run(capsys, "sweep", "--catalog", "mickens", "--amplitudes", "0.5:2:4",
                       "--compare-oracle")
    assert code == 0
    assert out.splitlines()[0] == "A,T,omega,err,oracle_T,rel_diff"
    assert all(float(r["rel_diff"]) <= 1e-6 for r in read_csv(out))


def test_missing_source_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["period", "--amplitude", "1"])
    assert info.value.code == 2


def test_report_is_strict_json_when_rows_hold_nan(capsys, tmp_path):
    path = tmp_path / "run.json"
    code, _, _ = run(capsys, "closure", "--system", "x", "--amplitudes", "1:2:2",
                     "--report", str(path))
    rep = json.loads(path.read_text(), parse_constant=lambda c: pytest.fail(c))
    assert code == 0 and rep["results"]["rows"][0]["defect"] is None

import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from murlab.cli import SCHEMA, main, parse_amplitudes, parse_angle, parse_grid, parse_vector
from murlab.qcore import PreconditionError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def run_csv(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "csv")
    assert code == 0, err
    return list(csv.DictReader(io.StringIO(out)))


@pytest.mark.parametrize(
    "text, value",
    [("0.5", 0.5), ("pi", math.pi), ("pi/8", math.pi / 8), ("3*pi/16", 3 * math.pi / 16), ("-pi/4", -math.pi / 4)],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value)


def test_parse_helpers():
    assert parse_grid("0:pi/4:3") == pytest.approx([0, math.pi / 8, math.pi / 4])
    assert parse_vector("1,0,0.5").tolist() == [1, 0, 0.5]
    a, b = parse_amplitudes("1,1j")
    assert (a, b) == pytest.approx((1 / math.sqrt(2), 1j / math.sqrt(2)))
    for bad in (lambda: parse_angle("deg"), lambda: parse_grid("0:1"), lambda: parse_vector("1,2")):
        with pytest.raises(PreconditionError):
            bad()


def test_direct_test_lambda(capsys):
    rep = run_json(capsys, "direct-test", "--lambda", "0.5", "--shots", "1000000", "--seed", "3")
    assert rep["schema"] == SCHEMA
    assert rep["analytic"]["epsilon_sq"] == pytest.approx(1.0, abs=1e-12)
    mc = rep["monte_carlo"]["epsilon"]
    assert abs(mc["squared"] - 1.0) <= 3 * mc["squared_std_error"]
    assert rep["flags"]["epsilon_sq_within_3se"]


def test_direct_test_lambda_one(capsys):
    rep = run_json(capsys, "direct-test", "--lambda", "1", "--shots", "1000")
    assert rep["analytic"]["epsilon"] == 0
    assert rep["monte_carlo"]["epsilon"]["value"] == 0


def test_direct_test_theta(capsys):
    rep = run_json(capsys, "direct-test", "--theta", "pi/8", "--gamma", "1", "--shots", "0")
    assert rep["analytic"]["eta_sq"] == pytest.approx(2 - math.sqrt(2), abs=1e-12)


def test_direct_test_noncommuting_exit_2(capsys):
    code, out, err = run(capsys, "direct-test", "--c-bloch", "1,0,0")
    assert code == 2
    assert out == ""
    assert "commute" in err


def test_direct_test_weak_gamma_exit_2(capsys):
    code, _, _ = run(capsys, "direct-test", "--theta", "0.1", "--gamma", "0.8")
    assert code == 2


def test_bad_arguments_exit_2(capsys):
    assert run(capsys, "circuit", "--format", "xml")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "direct-test")[0] == 2
    assert run(capsys, "distance", "--c-bloch", "0,0,2")[0] == 2


def test_circuit_strong_grid(capsys):
    rows = run_csv(capsys, "circuit", "--gamma", "1", "--theta-grid", "0:pi/4:9")
    assert len(rows) == 9
    for r in rows:
        theta = float(r["theta"])
        assert float(r["eta_sq_strong"]) == pytest.approx(2 * (math.cos(theta) - math.sin(theta)) ** 2, abs=1e-12)
        assert float(r["eta_sq_weak"]) == pytest.approx(float(r["eta_sq_strong"]), abs=1e-12)
    assert float(rows[-1]["eta_sq_strong"]) == pytest.approx(0, abs=1e-12)


def test_circuit_gamma_independence(capsys):
    strong = run_csv(capsys, "circuit", "--gamma", "1", "--theta-grid", "0:pi/2:7", "--state-amplitudes", "0.6,0.8j")
    weak = run_csv(
        capsys, "circuit", "--gamma", str(math.sqrt(0.75)), "--theta-grid", "0:pi/2:7", "--state-amplitudes", "0.6,0.8j"
    )
    for s, w in zip(strong, weak):
        assert float(w["eta_sq_weak"]) == pytest.approx(float(s["eta_sq_weak"]), abs=1e-12)


def test_circuit_weak_request_exit_2(capsys):
    assert run(capsys, "circuit", "--gamma", "0.7", "--method", "weak")[0] == 2
    assert run(capsys, "circuit", "--gamma", "0.9", "--method", "strong")[0] == 2


def test_circuit_json_structure(capsys):
    rep = run_json(capsys, "circuit", "--gamma", "0.9", "--theta", "0.3", "--shots", "2000", "--seed", "5")
    row = rep["analytic"]["rows"][0]
    assert set(row["probabilities"]) == {"+++", "++-", "+-+", "+--", "-++", "-+-", "--+", "---"}
    assert sum(row["probabilities"].values()) == pytest.approx(1)
    assert sum(row["counts"].values()) == 2000
    assert row["weak_valued"]["has_negative"] is False
    d = row["marginal_povms"]["final_D"]["+"]
    assert d["x"] == pytest.approx(0.5 * math.sin(0.6))


def test_distance_examples(capsys):
    rows = run_csv(capsys, "distance", "--c-bloch", "0,0,0.8")
    assert float(rows[0]["delta_sq_closed"]) == pytest.approx(0.4)
    assert float(rows[0]["delta2_sq"]) == pytest.approx(0.4, abs=1e-6)
    assert float(rows[0]["epsilon_sq_closed"]) == pytest.approx(0.4)
    assert rows[0]["epsilon_label"] == "faithful"
    rep = run_json(capsys, "distance", "--c-bloch", "1,0,0")
    assert rep["analytic"]["delta2_sq"] == pytest.approx(2 * math.sqrt(2), abs=1e-6)
    assert rep["analytic"]["epsilon_sq_closed"] == pytest.approx(2)
    assert rep["flags"]["epsilon_label"] == "formal"
    rep = run_json(capsys, "distance", "--a-bloch", "0,1,0", "--c-bloch", "0,1,0")
    assert rep["analytic"]["delta2"] == pytest.approx(0, abs=1e-12)
    assert rep["analytic"]["epsilon_sq_closed"] == pytest.approx(0, abs=1e-12)


def test_inequality_scan(capsys):
    rep = run_json(capsys, "inequality-scan")
    rows = rep["analytic"]["rows"]
    family = [r for r in rows if r["scheme"].startswith("z_instrument")]
    assert len(family) == 9
    assert all(abs(r["disc_lhs"] - 1) <= 1e-12 for r in family)
    mid = family[4]
    assert mid["additive_sum"] == pytest.approx(2 - math.sqrt(2), abs=1e-12)
    ident = next(r for r in rows if r["scheme"] == "identity")
    assert (ident["d_z"], ident["d_x"]) == pytest.approx((1, 0))
    assert ident["disc_satisfied"] and ident["additive_satisfied"]
    assert rep["flags"]["all_satisfied"]


def test_csv_headers(capsys):
    code, out, _ = run(capsys, "inequality-scan", "--theta", "0.2", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == (
        "scheme,d_z,d_x,disc_lhs,disc_satisfied,additive_sum,additive_satisfied,outside_region"
    )
    code, out, _ = run(capsys, "direct-test", "--lambda", "0.3", "--shots", "100", "--format", "csv")
    assert out.splitlines()[0] == "quantity,analytic,monte_carlo,std_error"


@pytest.mark.parametrize(
    "argv",
    [
        ["direct-test", "--lambda", "0.4", "--theta", "0.2", "--shots", "5000", "--seed", "9"],
        ["circuit", "--gamma", "1", "--theta-grid", "0:pi/4:3", "--shots", "1000", "--seed", "2"],
        ["distance", "--c-bloch", "0.3,0.1,0.5"],
        ["inequality-scan"],
    ],
)
def test_json_byte_identical(capsys, argv):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0
    assert first[1] == second[1]


def test_seed_changes_monte_carlo(capsys):
    a = run_json(capsys, "direct-test", "--lambda", "0.4", "--shots", "5000", "--seed", "1")
    b = run_json(capsys, "direct-test", "--lambda", "0.4", "--shots", "5000", "--seed", "2")
    assert a["monte_carlo"] != b["monte_carlo"]
    assert a["analytic"] == b["analytic"]


def test_out_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, out, _ = run(capsys, "inequality-scan", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["command"] == "inequality-scan"


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "murlab.cli", "distance", "--c-bloch", "0,0,0.8", "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("delta2,")


def test_json_has_no_nan(capsys):
    _, out, _ = run(capsys, "circuit", "--gamma", "1", "--theta-grid", "0:pi:5")
    assert "NaN" not in out and "Infinity" not in out
    assert np.isfinite(json.loads(out)["analytic"]["rows"][0]["eta_strong"])

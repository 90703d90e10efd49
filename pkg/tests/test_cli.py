import json

import pytest

from ratelift.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rate_example(capsys):
    code, out, _ = run(capsys, "rate", "--method", "subgrad", "--regime", "sharp",
                       "--L", "1", "--alpha", "1", "--delta0", "8", "--eps", "1")
    assert code == 0 and out.strip() == "12"


def test_lift_example(capsys):
    code, out, _ = run(capsys, "lift", "--theorem", "1", "--method", "subgrad", "--regime", "quadratic",
                       "--D", "1", "--eps", "0.1", "--L", "1")
    assert code == 0 and out.strip() == "800"


def test_lift_growth(capsys):
    code, out, _ = run(capsys, "lift", "--theorem", "2", "--method", "subgrad", "--regime", "sharp",
                       "--alpha", "1", "--q", "2", "--delta0", "8", "--eps", "1", "--L", "1")
    assert code == 0 and out.strip() == "12"


def test_restart_bound_json(capsys):
    code, out, _ = run(capsys, "restart-bound", "--corollary", "2", "--method", "prox", "--regime", "sharp",
                       "--alpha", "2", "--q", "2", "--delta0", "10", "--eps", "0.01", "--json")
    data = json.loads(out)
    assert code == 0 and data["epochs"] == 10
    assert data["iterations"] == pytest.approx(5.0, rel=1e-12)


def test_asymptotic_rate_notes_on_stderr(capsys):
    code, out, err = run(capsys, "rate", "--method", "prox", "--regime", "general", "--eps", "0.1")
    assert code == 0 and out.strip() == "10" and "constant" in err


def test_usage_errors(capsys):
    assert run(capsys, "rate", "--method", "bundle", "--regime", "sharp")[0] == 2
    assert run(capsys, "lift", "--theorem", "2", "--method", "subgrad", "--regime", "sharp")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_solve(tmp_path, capsys):
    cfg = {"problem": {"kind": "power_norm", "alpha": 1.0, "p": 1.0}, "solver": "proximal_point",
           "x0": [10.0], "epsilon": 1e-9, "rates": [{"method": "prox", "regime": "sharp"}]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "solve", "--config", str(path), "--output-dir", str(tmp_path / "out"))
    assert code == 0 and "respected" in out
    assert (tmp_path / "out" / "report.json").exists()


def test_solve_reports_violation(tmp_path, capsys):
    # a growth modulus overstated 100x makes the sharp-rate prediction too small
    cfg = {"problem": {"kind": "power_norm", "alpha": 1.0, "p": 1.0}, "solver": "proximal_point",
           "x0": [10.0], "epsilon": 1e-9, "rho": 0.1,
           "rates": [{"method": "prox", "regime": "sharp", "alpha": 10.0}], "output_dir": str(tmp_path)}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "solve", "--config", str(path))
    assert code == 1 and "VIOLATED" in out


def test_solve_invalid_config(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"problem": {"kind": "power_norm", "alpha": 1, "p": 1},
                                "solver": "proximal_point", "x0": [1.0], "epsilon": 0}))
    code, _, err = run(capsys, "solve", "--config", str(path))
    assert code == 2 and "epsilon" in err


def test_verify(capsys):
    problem = json.dumps({"kind": "power_norm", "alpha": 1.0, "p": 2.0, "D": 5.0})
    code, out, _ = run(capsys, "verify", "--problem", problem)
    assert code == 0 and json.loads(out)["smoothness"]["passed"]
    code, out, _ = run(capsys, "verify", "--problem", problem, "--L", "1")
    assert code == 1
    code, out, _ = run(capsys, "verify", "--problem", problem, "--p", "1")
    assert code == 1 and not json.loads(out)["growth"]["passed"]


def test_envelope_check(tmp_path, capsys):
    problem = json.dumps({"kind": "power_norm", "alpha": 1.0, "p": 1.0})
    csv_path = tmp_path / "env.csv"
    code, out, _ = run(capsys, "envelope-check", "--problem", problem, "--solver", "proximal_point",
                       "--x0", "1", "--steps", "3", "--rho", "0.1", "--p", "1", "--csv", str(csv_path))
    assert code == 0 and json.loads(out)["passed"]
    assert csv_path.read_text().startswith("x,f,min_models,h")
    code, out, _ = run(capsys, "envelope-check", "--problem", problem, "--solver", "polyak_subgradient",
                       "--x0", "1", "--steps", "1", "--p", "1", "--eps", "0.9", "--alpha-scale", "2")
    assert code == 1 and not json.loads(out)["reports"]["growth"]["passed"]

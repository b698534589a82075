import json
import math
import subprocess
import sys

import pytest

from gaugedqball import cli, thinwall


def run(*argv):
    return cli.main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


def test_thinwall_output(tmp_path):
    assert run("thinwall", "--epsilon", 1.5, "--e", 0.1, "--Q", 500, "--out", tmp_path) == 0
    res = load(tmp_path / "thinwall.json")
    assert res["q_max_printed"] == pytest.approx(1170.8, abs=0.05)
    assert res["q_max"] == pytest.approx(thinwall.q_max(0.1, 1.5), rel=1e-15)
    assert set(res["exact"]) == {"f_tilde", "r_star", "e_star", "omega", "validity", "valid", "branch"}


def test_thinwall_degenerate_output(tmp_path):
    assert run("thinwall", "--epsilon", 2, "--e", 1, "--Q", 0.5, "--out", tmp_path) == 0
    res = load(tmp_path / "thinwall.json")
    assert res["q_max"] == pytest.approx(math.pi / 2, rel=1e-15)
    assert "exact" not in res


def test_sweep_finds_unit_slope_crossing(tmp_path):
    code = run("sweep", "--epsilon", 1.5, "--e", 0.1, "--start", 300, "--stop", 10000, "--steps", 60, "--log",
               "--out", tmp_path)
    assert code == 0
    s = load(tmp_path / "sweep_summary.json")
    lo, hi = s["crossing_bracket"]
    assert lo <= s["q_max"] <= hi
    assert s["crossing_estimate"] == pytest.approx(s["q_max"], rel=1e-2)
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == "Q,r_star,e_star,omega,de_dq"


def test_solve_outputs(tmp_path):
    assert run("solve", "--epsilon", 1.5, "--e", 0.01, "--omega", 0.8, "--out", tmp_path) == 0
    obs = load(tmp_path / "observables.json")
    assert obs["energy_rel_gap"] < 1e-6
    assert obs["decay"] == pytest.approx(0.6, rel=1e-2)
    assert obs["coulomb_coefficient"] == pytest.approx(obs["coulomb_coefficient_expected"], rel=1e-2)
    assert (tmp_path / "profile.csv").read_text().startswith("r,f,g,residual_f,residual_g\n")


def test_picard_outputs(tmp_path):
    assert run("picard", "--epsilon", 1.5, "--e", 0.01, "--omega", 0.8, "--out", tmp_path) == 0
    s = load(tmp_path / "picard_summary.json")
    assert set(s["sup_gap"]) == {"g_thinwall", "g1", "g2"}
    assert s["sup_gap"]["g1"] < 1e-3
    header = (tmp_path / "picard.csv").read_text().splitlines()[0]
    assert header == "r,g_thinwall,g1,g2,g_numeric"


def test_check_passes(tmp_path):
    assert run("check", "--out", tmp_path) == 0
    assert load(tmp_path / "check.json")["passed"] is True


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("thinwall", "--epsilon", 1.5, "--e", 0.05, "--Q", 800, "--out", d) == 0
    assert (a / "thinwall.json").read_bytes() == (b / "thinwall.json").read_bytes()


def test_config_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epsilon = 1.5\ne = 0.1\nQ = 500\n")
    assert run("thinwall", "--config", cfg, "--out", tmp_path / "a") == 0
    assert load(tmp_path / "a" / "thinwall.json")["Q"] == 500
    assert run("thinwall", "--config", cfg, "--Q", 700, "--out", tmp_path / "b") == 0
    assert load(tmp_path / "b" / "thinwall.json")["Q"] == 700


@pytest.mark.parametrize("argv", [
    ["thinwall", "--epsilon", 3, "--e", 0.1, "--Q", 500],
    ["solve", "--epsilon", 1.5, "--e", 0.1, "--omega", 1.0],
    ["solve", "--epsilon", 1.5, "--e", 0.1, "--omega", 0.8, "--tol-solver", -1],
    ["thinwall", "--epsilon", 1.5, "--e", 0.1, "--omega", 0.8],
    ["bogus"],
])
def test_bad_input_exits_2(tmp_path, argv):
    assert run(*argv, "--out", tmp_path) == 2 if argv != ["bogus"] else run(*argv) == 2


def test_unknown_config_key_exits_2(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("epsilon = 1.5\ncolour = blue\n")
    assert run("thinwall", "--config", cfg, "--out", tmp_path) == 2


def test_solver_failure_exits_1_with_diagnostics(tmp_path):
    assert run("solve", "--epsilon", 1.5, "--e", 0.1, "--omega", 0.8, "--out", tmp_path) == 1
    diag = load(tmp_path / "diagnostics.json")
    assert diag["status"] == "failed" and diag["error"] == "NoSolutionError"


def test_dumps_rejects_non_finite():
    with pytest.raises(cli.NonFiniteError):
        cli.dumps({"x": math.nan})
    with pytest.raises(cli.NonFiniteError):
        cli.dumps([math.inf])


def test_dumps_round_trips_floats():
    x = 0.1 + 0.2
    assert json.loads(cli.dumps({"b": x, "a": [1, True, None]})) == {"a": [1, True, None], "b": x}
    assert cli.dumps({"b": 1, "a": 2}).index('"a"') < cli.dumps({"b": 1, "a": 2}).index('"b"')


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gaugedqball", "thinwall", "--epsilon", "1.5", "--e", "0.1",
                           "--Q", "500", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "thinwall.json").exists()

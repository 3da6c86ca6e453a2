import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from crnqp.cli import main
from crnqp.output import read_csv

NETS = Path(__file__).resolve().parents[1] / "networks"
BD = str(NETS / "birth_death.crn")
ANDERSON = str(NETS / "anderson13.crn")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_json(capsys):
    code, out, _ = run(capsys, "parse", str(NETS / "isomer.crn"), "--check-weak-reversibility")
    assert code == 0
    body = json.loads(out)
    assert body["species"] == ["A1", "A2"]
    assert len(body["reactions"]) == 2 and len(body["complexes"]) == 2
    assert body["weakly_reversible"] is True
    code, out, _ = run(capsys, "parse", ANDERSON, "--check-weak-reversibility")
    assert json.loads(out)["weakly_reversible"] is False


def test_parse_without_flag_has_no_verdict(capsys):
    _, out, _ = run(capsys, "parse", "--net", BD)
    assert "weakly_reversible" not in json.loads(out)


def test_parse_malformed(tmp_path, capsys):
    bad = tmp_path / "bad.crn"
    bad.write_text("A -> B, k=1\nB -> C, k=-1\n")
    code, out, err = run(capsys, "parse", str(bad))
    assert code == 1 and out == ""
    assert "line 2" in err and "column 12" in err


def test_missing_file_is_input_error(capsys):
    code, _, err = run(capsys, "parse", "/nonexistent/net.crn")
    assert code == 1 and "cannot read" in err


def test_bad_flag_exits_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--net", BD, "--mode", "teleport", "--x0", "1", "--T", "1"])
    assert info.value.code == 1


def test_both_network_sources_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["parse", "--net", BD, "--network", "A <-> 0, k=1, k=1"])
    assert info.value.code == 1


def test_simulate_ode_closed_form(tmp_path, capsys):
    out = tmp_path / "ode.csv"
    assert main(["simulate", "--net", BD, "--mode", "ode", "--x0", "3", "--T", "5", "--tol", "1e-10", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# tool: crnqp")
    assert "# network: " in text and '"mode": "ode"' in text
    cols, data = read_csv(out)
    assert cols[:2] == ["t", "x_1"]
    assert data[-1, 0] == 5.0
    assert np.allclose(data[:, 1], 1 + 2 * np.exp(-data[:, 0]), atol=1e-8)


def test_simulate_ssa_byte_identical(tmp_path):
    args = ["simulate", "--net", BD, "--mode", "ssa", "--x0", "3", "--T", "5", "--n", "50", "--seed", "12345"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert '"seed": 12345' in a.read_text()
    main(args[:-1] + ["12346", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_simulate_hamilton_constant_H(tmp_path):
    out = tmp_path / "h.csv"
    argv = ["simulate", "--net", BD, "--mode", "hamilton", "--x0", "1.5", "--p0", "0.2", "--T", "3", "--out", str(out)]
    assert main(argv) == 0
    cols, data = read_csv(out)
    H = data[:, cols.index("H")]
    assert np.ptp(H) < 1e-9
    assert H[0] == pytest.approx(1.5 * (math.exp(-0.2) - 1) + math.exp(0.2) - 1, abs=1e-12)


def test_simulate_hamilton_needs_p0(capsys):
    code, _, err = run(capsys, "simulate", "--net", BD, "--mode", "hamilton", "--x0", "1", "--T", "1")
    assert code == 1 and "--p0" in err


def test_simulate_json_format(capsys):
    code, out, _ = run(capsys, "simulate", "--net", BD, "--mode", "ode", "--x0", "2", "--T", "1", "--format", "json")
    body = json.loads(out)
    assert code == 0 and body["columns"][0] == "t"
    assert body["meta"]["params"]["mode"] == "ode"


def test_complex_balance_anderson(tmp_path):
    assert main(["analyze", "--net", ANDERSON, "--complex-balance", "--out", str(tmp_path)]) == 0
    body = json.loads((tmp_path / "complex-balance.json").read_text())
    assert body["balanced"] is False
    assert body["c"] == pytest.approx([2.0])
    table = {r["complex"]: r["residual"] for r in body["residuals"]}
    assert table["A"] == pytest.approx(-2.0)


def test_quasipotential_table(tmp_path):
    argv = ["analyze", "--net", BD, "--quasipotential", "--x-range", "0.1,5", "--grid-points", "50", "--out", str(tmp_path)]
    assert main(argv) == 0
    cols, data = read_csv(tmp_path / "quasipotential.csv")
    assert cols == ["x", "p", "Q"]
    x = data[:, 0]
    assert np.allclose(data[:, 2], x * np.log(x) - x + 1, atol=1e-8)
    assert np.allclose(data[:, 1], np.log(x), atol=1e-10)


def test_levelset_structure(tmp_path):
    argv = ["analyze", "--net", BD, "--levelset", "--energies", "0,0.5,1", "--out", str(tmp_path)]
    assert main(argv) == 0
    cols, data = read_csv(tmp_path / "levelset.csv")
    assert cols == ["energy", "x", "p", "branch"]
    assert set(data[:, 0]) == {0.0, 0.5, 1.0}
    H = data[:, 1] * (np.exp(-data[:, 2]) - 1) + np.exp(data[:, 2]) - 1
    assert np.allclose(H, data[:, 0], atol=1e-9)
    # two branches per x on each level (p below and above the minimum)
    zero = data[data[:, 0] == 0.0]
    assert np.allclose(np.sort(zero[zero[:, 1] == zero[0, 1], 2]), sorted([0.0, math.log(zero[0, 1])]), atol=1e-10)


def test_steady_state_and_hjb(tmp_path):
    argv = ["analyze", "--net", str(NETS / "isomer.crn"), "--x0", "2,0", "--steady-state", "--hjb-residual", "--out", str(tmp_path)]
    assert main(argv) == 0
    ss = json.loads((tmp_path / "steady-state.json").read_text())
    assert ss["c"] == pytest.approx([1.0, 1.0])
    cols, data = read_csv(tmp_path / "hjb-residual.csv")
    assert data.shape == (100, 3)
    assert np.abs(data[:, -1]).max() < 1e-10


def test_stationary_truncated(tmp_path):
    argv = ["analyze", "--net", BD, "--stationary", "--n", "10", "--caps", "60", "--out", str(tmp_path)]
    assert main(argv) == 0
    cols, data = read_csv(tmp_path / "stationary.csv")
    prob = data[:, cols.index("probability")]
    assert prob.sum() == pytest.approx(1.0, abs=1e-12)
    from scipy.stats import poisson

    counts = np.rint(data[:, 0] * 10).astype(int)
    assert np.allclose(prob, poisson.pmf(counts, 10) / poisson.cdf(60, 10), atol=1e-12)


def test_stationary_needs_caps(capsys):
    code, _, err = run(capsys, "analyze", "--net", BD, "--stationary")
    assert code == 1 and "--caps" in err


def test_plot_outputs(tmp_path):
    pytest.importorskip("matplotlib")
    argv = ["analyze", "--net", BD, "--levelset", "--quasipotential", "--plot", "--out", str(tmp_path)]
    assert main(argv) == 0
    for name in ("levelset.png", "quasipotential.png"):
        assert (tmp_path / name).read_bytes()[:4] == b"\x89PNG"
    traj = tmp_path / "run.csv"
    main(["simulate", "--net", BD, "--mode", "ode", "--x0", "3", "--T", "2", "--plot", "--out", str(traj)])
    assert (tmp_path / "run.png").exists()


def test_numerical_failure_exit_2(capsys):
    code, _, err = run(capsys, "analyze", "--network", "A -> 2A, k=1", "--steady-state", "--x0", "1")
    assert code == 2 and "numerical failure" in err


def test_console_script():
    res = subprocess.run(
        [sys.executable, "-m", "crnqp.cli", "parse", "--network", "A <-> 0, k=1, k=1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert res.returncode == 0
    assert json.loads(res.stdout)["species"] == ["A"]

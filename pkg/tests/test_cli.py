import csv
import subprocess
import sys

import pytest

from fishsim.cli import SIDECAR, main

CONSTANT = """
[model]
gamma = 1
a = 2
b = 1
K = 2
lag = 1

[history]
phi = 2.0

[run]
t_end = 20
"""

PERIODIC = """
[model]
gamma = 1
a = {kind = "sinusoid", mean = 2, amplitude = 0.5, period = 1, phase = 0}
b = 1
K = 1
lag = 0.1
"""

SWEEP = CONSTANT + """
[sweep]
axis1 = {param = "gamma", start = 0.5, stop = 8.0, count = 8}
axis2 = {param = "lag", start = 0.1, stop = 2.0, count = 8}
"""


def run(tmp_path, cmd, text, *extra, name="cfg.toml", out="out"):
    cfg = tmp_path / name
    cfg.write_text(text)
    code = main([cmd, "--config", str(cfg), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_equilibrium(tmp_path, capsys):
    code, out = run(tmp_path, "simulate", CONSTANT)
    assert code == 0 and capsys.readouterr().err == ""
    data = rows(out / "trajectory.csv")
    assert list(data[0]) == ["t", "N"]
    assert max(abs(float(r["N"]) - 2.0) for r in data) < 1e-9
    assert len(rows(out / "trajectory_plot.csv")) == 1000
    assert (out / SIDECAR).exists()


def test_simulate_is_byte_deterministic_and_sidecar_reproduces(tmp_path):
    text = CONSTANT.replace("phi = 2.0", "phi = 0.5")
    _, first = run(tmp_path, "simulate", text, out="a")
    _, second = run(tmp_path, "simulate", text, out="b")
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()
    code = main(["simulate", "--config", str(first / SIDECAR), "--out", str(tmp_path / "c")])
    assert code == 0
    for name in ("trajectory.csv", "trajectory_plot.csv", SIDECAR):
        assert (first / name).read_bytes() == (tmp_path / "c" / name).read_bytes()


def test_check_rows(tmp_path):
    code, out = run(tmp_path, "check", CONSTANT)
    assert code == 0
    data = {(r["group"], r["name"]): r for r in rows(out / "conditions.csv")}
    assert float(data["global_attractor", "gamma * sup int a ds < 6"]["quantity"]) == 2.0
    assert float(data["local_stability", "gamma(a-b)b/a * sup int r ds < 3/2"]["quantity"]) == 0.5
    assert all(r["verdict"] in ("holds", "fails", "inconclusive") for r in data.values())
    assert "[global_attractor]" in (out / "conditions.txt").read_text()


def test_periodic_lenient_and_strict(tmp_path, capsys):
    code, out = run(tmp_path, "periodic", PERIODIC)
    assert code == 0
    assert "not established" in capsys.readouterr().err
    report = (out / "report.txt").read_text()
    residual = float(report.split("residual ")[1].split()[0])
    assert residual < 1e-6
    assert rows(out / "orbit.csv")[0].keys() == {"t", "N"}
    code, out = run(tmp_path, "periodic", PERIODIC, "--strict", out="strict")
    assert code == 1 and not out.exists()


def test_converge(tmp_path):
    text = CONSTANT.replace("lag = 1", "lag = 0.5") + \
        "\n[converge]\nhistories = [{phi = 0.5}, {phi = 3.0}, {phi = 1.0}]\n"
    code, out = run(tmp_path, "converge", text)
    assert code == 0
    data = rows(out / "convergence.csv")
    assert [(r["run_i"], r["run_j"]) for r in data] == [("0", "1"), ("0", "2"), ("1", "2")]
    assert all(float(r["sup_diff_last_period"]) < 1e-4 and r["converged"] == "true" for r in data)


@pytest.mark.slow
def test_sweep(tmp_path):
    code, out = run(tmp_path, "sweep", SWEEP, "--jobs", "2")
    assert code == 0
    data = rows(out / "sweep.csv")
    assert len(data) == 64
    for r in data:
        q = 2.0 * float(r["value1"]) * float(r["value2"])
        if abs(q - 6.0) > 1e-6:
            assert r["attractor_verdict"] == ("holds" if q < 6 else "fails")


def test_sweep_requires_section(tmp_path, capsys):
    code, out = run(tmp_path, "sweep", CONSTANT)
    assert code == 1 and "sweep" in capsys.readouterr().err


def test_input_errors(tmp_path, capsys):
    code, _ = run(tmp_path, "check", CONSTANT.replace("gamma = 1", "gamma = -1"))
    assert code == 1 and "model.gamma" in capsys.readouterr().err
    code, _ = run(tmp_path, "check", "[model\n")
    assert code == 1 and "line 1" in capsys.readouterr().err
    code = main(["check", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)])
    assert code == 1
    code, _ = run(tmp_path, "check", CONSTANT, "--jobs", "0")
    assert code == 1


def test_unknown_key_warns_unless_strict(tmp_path, capsys):
    text = CONSTANT.replace("lag = 1", "lag = 1\nlagg = 2")
    code, _ = run(tmp_path, "check", text)
    assert code == 0 and "model.lagg" in capsys.readouterr().err
    code, _ = run(tmp_path, "check", text, "--strict", out="s")
    assert code == 1


def test_overflow_exit_code(tmp_path, capsys):
    text = "[model]\ngamma = 1\na = 1000\nb = 1\nK = 2\nlag = 2\n[history]\nphi = 1\n" \
           "[run]\nt_end = 10\n"
    code, out = run(tmp_path, "simulate", text)
    assert code == 2
    assert "blow-up" in capsys.readouterr().err
    assert not (out / "trajectory.csv").exists()


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(CONSTANT)
    proc = subprocess.run([sys.executable, "-m", "fishsim.cli", "check", "--config", str(cfg),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "" and proc.stderr == ""
    assert (tmp_path / "o" / "conditions.csv").exists()

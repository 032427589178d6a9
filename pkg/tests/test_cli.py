import subprocess
import sys

import numpy as np
import pytest

from gradflow_rom import io
from gradflow_rom.avf import EnergyIncrease, NewtonDivergence
from gradflow_rom.problems import AllenCahnProblem
from gradflow_rom.cli import main

CONFIG = """
[problem]
domain = 0, 1, 0, 1
bc = neumann
potential = quartic
initial = tanh-circle

[mesh]
h = 0.125

[time]
T = 0.1
dt = 0.01

[parameter]
kind = inverse-diffusivity
train = 10, 25, 50
test = 20

[rom]
n_max = 3
tol_g = 1e-6
m_deim = 12
"""


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "c.ini").write_text(CONFIG)
    return d


def run(workdir, *args):
    return main([args[0], "--config", str(workdir / "c.ini"), "--out", str(workdir / "out"),
                 *args[1:]])


def test_fom_command(workdir, capsys):
    assert run(workdir, "fom", "--mu", "20") == 0
    U = io.read_matrix(workdir / "out" / "fom_mu20.bin")
    assert U.shape == (384, 11)
    E = [float(r["E_h"]) for r in io.read_csv(workdir / "out" / "fom_energy_mu20.csv")]
    assert np.all(np.diff(E) <= 1e-10)


def test_rom_before_greedy_is_config_error(workdir):
    assert run(workdir, "rom") == 2


def test_greedy_then_online_commands(workdir, capsys):
    assert run(workdir, "greedy") == 0
    out = workdir / "out"
    for name in ("basis.bin", "deim_modes.bin", "selected.csv", "indicator_history.csv",
                 "deim_indices.csv", "deim_singular_values.csv"):
        assert (out / name).exists(), name
    Psi = io.read_matrix(out / "basis.bin")
    assert Psi.shape == (384, 3)
    for mode in ("exact", "deim"):
        assert run(workdir, "rom", "--mode", mode) == 0
    assert "full_nonlinear_evals=0" in capsys.readouterr().out
    assert run(workdir, "compare") == 0
    assert run(workdir, "compare") == 0
    rows = io.read_csv(out / "reports.csv")
    assert len(rows) == 2
    assert rows[0]["sol_err_podg"] == rows[1]["sol_err_podg"]      # reproducible
    assert run(workdir, "bench", "--repeats", "1") == 0
    assert run(workdir, "stability") == 0
    text = (out / "stability_mu20.txt").read_text()
    assert "satisfied = " in text and "global_bound = " in text


def test_bad_config_exit_code(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[mesh]\nh = 0\n")
    assert main(["fom", "--config", str(p)]) == 2


@pytest.mark.parametrize("exc,code", [(NewtonDivergence("stalled"), 3),
                                      (EnergyIncrease("energy went up"), 4)])
def test_failure_exit_codes(workdir, monkeypatch, capsys, exc, code):
    def boom(self, mu, energy_check="fail"):
        raise exc

    monkeypatch.setattr(AllenCahnProblem, "solve_fom", boom)
    assert run(workdir, "fom") == code
    assert str(exc) in capsys.readouterr().err


def test_module_entry_point(workdir):
    res = subprocess.run([sys.executable, "-m", "gradflow_rom.cli", "fom", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "--config" in res.stdout

import numpy as np
import pytest

from gradflow_rom.config import ConfigError, ExperimentConfig, build_problem, load_config
from gradflow_rom.dg import DGSpace
from gradflow_rom.mesh import build_mesh
from gradflow_rom.problems import (LOG_TRAIN, QUARTIC_TRAIN, AllenCahnProblem,
                                   logarithmic_random_problem, quartic_circle_problem,
                                   random_initial)

CONFIG = """
[problem]
domain = 0, 1, 0, 1
bc = neumann
potential = quartic
initial = tanh-circle

[mesh]
h = 0.125

[time]
T = 0.05
dt = 0.01

[parameter]
kind = inverse-diffusivity
train = 10, 50
test = 20

[rom]
n_max = 3
tol_g = 1e-3
m_deim = 10

[run]
out = results
"""


def test_random_initial_contract():
    space = DGSpace(build_mesh((0, 2 * np.pi, 0, 2 * np.pi), 2 * np.pi / 67, "periodic"))
    u = random_initial(7, space, 0.05)
    assert np.array_equal(u, random_initial(7, space, 0.05))
    assert not np.array_equal(u, random_initial(8, space, 0.05))
    assert np.all(np.abs(u) <= 0.05)
    # uniform on [-a, a]: std a / sqrt(3)
    assert abs(u.mean()) <= 3 * 0.05 / np.sqrt(3) / np.sqrt(u.size)
    with pytest.raises(ValueError):
        random_initial(0, space, 0.0)


def test_training_sets():
    assert QUARTIC_TRAIN[0] == 10 and QUARTIC_TRAIN[-1] == 500 and len(QUARTIC_TRAIN) == 10
    assert np.allclose(LOG_TRAIN, [0.05, 0.08, 0.11, 0.14, 0.17])


def test_problem_parameter_maps():
    p = quartic_circle_problem(h=0.25, T=0.02)
    assert p.epsilon_of(200) == pytest.approx(0.005)
    u0 = p.initial_of(10)
    assert u0.shape == (p.space.N_dof,) and np.all(np.abs(u0) <= 1.5)   # L2 projection overshoots on coarse meshes
    q = logarithmic_random_problem(h=2 * np.pi / 8, T=0.02)
    assert q.epsilon_of(0.1) == 0.04
    assert q.potential_of(0.1).theta == 0.1
    assert np.array_equal(q.initial_of(0.05), q.initial_of(0.17))
    with pytest.raises(ValueError):
        AllenCahnProblem(p.operators, p.grid, "temperature", p.potential, p.initial)


def test_fom_counter():
    p = quartic_circle_problem(h=0.25, T=0.02)
    tr = p.solve_fom(10)
    assert p.fom_solves == 1 and tr.meta["mu"] == 10


def test_load_config(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(CONFIG)
    cfg = load_config(path)
    assert cfg.h == 0.125 and cfg.T == 0.05 and cfg.train == (10.0, 50.0)
    assert cfg.n_max == 3 and cfg.test == (20.0,)
    prob = build_problem(cfg)
    assert prob.space.N_dof == 3 * 2 * 64
    assert prob.grid.J == 5


@pytest.mark.parametrize("edit,message", [
    (("h = 0.125", "h = -1"), "h must be positive"),
    (("bc = neumann", "bc = dirichlet"), "unknown bc"),
    (("initial = tanh-circle", "initial = random"), "seed"),
    (("potential = quartic", "potential = logarithmic"), "theta_c"),
    (("dt = 0.01", "dt = 0.03"), "evenly"),
    (("kind = inverse-diffusivity", "kind = temperature"), "temperature"),
    (("n_max = 3", "n_max = three"), "n_max"),
    (("train = 10, 50", "train = 10, -5"), "positive"),
])
def test_config_errors(tmp_path, edit, message):
    path = tmp_path / "c.ini"
    path.write_text(CONFIG.replace(*edit))
    with pytest.raises(ConfigError, match=message):
        load_config(path)


def test_missing_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_reference_configs_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    q = load_config(root / "quartic_circle.ini")
    assert q.h == 0.015 and len(q.train) == 10
    lg = load_config(root / "logarithmic_random.ini")
    assert lg.theta_c == 1.0 and lg.seed == 0 and lg.bc == "periodic"


def test_unknown_keys_are_kept():
    cfg = ExperimentConfig()
    assert cfg.validate() is cfg

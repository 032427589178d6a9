import numpy as np
import pytest

from oracles import naive_l2_time_error
from gradflow_rom import io
from gradflow_rom.metrics import l2_time_error, linf_energy_error


def test_l2_time_error_cases(small_ops, rng):
    M = small_ops.M
    A = rng.standard_normal((small_ops.N_dof, 11))
    assert l2_time_error(A, A, M, 0.1) == 0
    # constant offset c: sqrt(T c^2 |Omega|) with T = J dt
    c = 0.3
    assert l2_time_error(A, A + c, M, 0.1) == pytest.approx(np.sqrt(1.0 * c * c * 1.0), rel=1e-12)
    B = rng.standard_normal(A.shape)
    assert l2_time_error(A, B, M, 0.1) == pytest.approx(naive_l2_time_error(A, B, M, 0.1), rel=1e-12)
    with pytest.raises(ValueError):
        l2_time_error(A, B[:, :-1], M, 0.1)


def test_linf_energy_error():
    E = np.linspace(1, 0, 11)
    assert linf_energy_error(E, E) == 0
    F = E.copy()
    F[4] += 1e-3
    assert linf_energy_error(E, F) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        linf_energy_error(E, E[:-1])


@pytest.mark.parametrize("shape", [(5, 3), (1, 7), (4, 1)])
def test_matrix_round_trip(tmp_path, rng, shape):
    A = rng.standard_normal(shape)
    io.write_matrix(tmp_path / "a.bin", A)
    assert np.array_equal(io.read_matrix(tmp_path / "a.bin"), A)


def test_matrix_layout(tmp_path):
    io.write_matrix(tmp_path / "a.bin", np.array([[1.0, 2.0], [3.0, 4.0]]))
    raw = (tmp_path / "a.bin").read_bytes()
    assert raw[:8] == b"GFROMMAT"
    assert int.from_bytes(raw[8:16], "little") == 2
    assert np.frombuffer(raw[24:], "<f8").tolist() == [1.0, 3.0, 2.0, 4.0]


def test_matrix_corruption(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOTMAGIC" + bytes(16))
    with pytest.raises(ValueError):
        io.read_matrix(p)
    io.write_matrix(p, np.ones((3, 3)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError):
        io.read_matrix(p)
    p.write_bytes(b"GFROM")
    with pytest.raises(ValueError):
        io.read_matrix(p)


def test_append_only_csv(tmp_path):
    p = tmp_path / "r.csv"
    io.append_csv(p, {"mu": 1, "err": 0.5})
    io.append_csv(p, {"mu": 2, "err": 0.25})
    lines = p.read_text().splitlines()
    assert lines[0] == "mu,err" and len(lines) == 3
    assert io.read_csv(p)[1] == {"mu": "2", "err": "0.25"}


def test_energy_trace_and_key_values(tmp_path):
    io.write_energy_trace(tmp_path / "e.csv", [0.0, 0.1], [1.0, 0.5])
    rows = io.read_csv(tmp_path / "e.csv")
    assert float(rows[1]["E_h"]) == 0.5
    io.write_key_values(tmp_path / "s.txt", {"satisfied": True, "bound": 0.1})
    assert (tmp_path / "s.txt").read_text() == "satisfied = True\nbound = 0.1\n"
